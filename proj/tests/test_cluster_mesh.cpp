#include <doctest.h>

#include "test_helpers.hpp"
#include "triflow/cluster_mesh.hpp"
#include "triflow/diffgeo.hpp"
#include "triflow/graph_map.hpp"

using namespace triflow;

namespace {

double force_balance_error(const ClusterMesh& mesh, const Vec3& gamma) {
  double worst = 0;
  for (int n = 0; n < mesh.junction.node_count(); ++n) {
    auto nu = junction_conormals(mesh, n);
    Vec3 sum = gamma[0] * nu[0] + gamma[1] * nu[1] + gamma[2] * nu[2];
    worst = std::max(worst, sum.norm());
  }
  return worst;
}

}  // namespace

TEST_CASE("theta network generator satisfies the junction force balance") {
  ClusterMesh mesh = build_reference_cluster({"theta-network", Vec3(1, 1, 1), 64});
  CHECK(mesh.dim == 1);
  CHECK(mesh.junction.node_count() == 2);
  CHECK(validate_mesh(mesh).ok());
  CHECK(force_balance_error(mesh, Vec3(1, 1, 1)) < 1e-10);

  // pairwise conormal angles are the Young angles (2 pi / 3 here)
  auto nu = junction_conormals(mesh, 0);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(nu[i].norm() - 1.0) < 1e-14);
    double ang = std::acos(std::clamp(nu[i].dot(nu[(i + 1) % 3]), -1.0, 1.0));
    CHECK(ang == doctest::Approx(2.0 * testing::kPi / 3).epsilon(1e-9));
  }
}

TEST_CASE("theta network handles unequal tensions analytically") {
  for (Vec3 g : {Vec3(1, 1, 1.2), Vec3(2, 1, 1.2)}) {
    ClusterMesh mesh = build_reference_cluster({"theta-network", g, 48});
    CHECK(validate_mesh(mesh).ok());
    CHECK(force_balance_error(mesh, g) < 1e-8);
  }
}

TEST_CASE("reference generators reject bad input") {
  CHECK_THROWS_AS(build_reference_cluster({"theta-network", Vec3(1, 1, 1), 2}), ValidationError);
  CHECK_THROWS_AS(build_reference_cluster({"no-such-generator", Vec3(1, 1, 1), 32}),
                  ValidationError);
  CHECK_THROWS_AS(build_reference_cluster({"theta-network", Vec3(1, -1, 1), 32}),
                  ValidationError);
}

TEST_CASE("double bubble generator meets the reference conventions") {
  ClusterMesh mesh = build_reference_cluster({"standard-double-bubble", Vec3(1, 1, 1), 32});
  CHECK(mesh.dim == 2);
  int tris = 0;
  for (int i = 0; i < 3; ++i) tris += mesh.patches[i].element_count();
  CHECK(tris > 1200);
  CHECK(tris < 3200);
  CHECK(validate_mesh(mesh).ok());

  // dihedral (conormal) angles within 2 degrees of 120
  for (int n = 0; n < mesh.junction.node_count(); ++n) {
    auto nu = junction_conormals(mesh, n);
    for (int i = 0; i < 3; ++i) {
      double ang = std::acos(std::clamp(nu[i].dot(nu[(i + 1) % 3]), -1.0, 1.0));
      CHECK(std::abs(ang - 2.0 * testing::kPi / 3) < 2.0 * testing::kPi / 180.0);
    }
  }
  CHECK(force_balance_error(mesh, Vec3(1, 1, 1)) < 2e-2);
}

TEST_CASE("d=2 force balance halves under refinement, d=1 stays analytic") {
  for (Vec3 g : {Vec3(1, 1, 1), Vec3(1, 1, 1.2), Vec3(2, 1, 1.2)}) {
    ClusterMesh coarse = build_reference_cluster({"standard-double-bubble", g, 24});
    ClusterMesh fine = build_reference_cluster({"standard-double-bubble", g, 48});
    double ec = force_balance_error(coarse, g);
    double ef = force_balance_error(fine, g);
    CHECK(ef < 0.6 * ec);

    CHECK(force_balance_error(build_reference_cluster({"theta-network", g, 48}), g) < 1e-8);
    CHECK(force_balance_error(build_reference_cluster({"theta-network", g, 96}), g) < 1e-8);
  }
}

TEST_CASE("validate_mesh flags constructed violations") {
  ClusterMesh mesh = build_reference_cluster({"theta-network", Vec3(1, 1, 1), 16});

  SUBCASE("junction coincidence") {
    ClusterMesh bad = mesh;
    int v = bad.junction.nodes[0].vertex[1];
    bad.patches[1].positions(v, 0) += 1e-3;
    auto rep = validate_mesh(bad);
    CHECK(!rep.ok());
    bool found = false;
    for (const auto& issue : rep.issues) found |= issue.code == "junction-coincidence";
    CHECK(found);
  }

  SUBCASE("orientation flip") {
    ClusterMesh bubble = build_reference_cluster({"standard-double-bubble", Vec3(1, 1, 1), 16});
    std::swap(bubble.patches[0].elements(3, 0), bubble.patches[0].elements(3, 1));
    auto rep = validate_mesh(bubble);
    CHECK(!rep.ok());
    bool found = false;
    for (const auto& issue : rep.issues) found |= issue.code == "orientation";
    CHECK(found);
  }

  SUBCASE("degenerate element") {
    ClusterMesh bad = mesh;
    bad.patches[0].positions.row(1) = bad.patches[0].positions.row(2);
    auto rep = validate_mesh(bad);
    bool found = false;
    for (const auto& issue : rep.issues) found |= issue.code == "degenerate-element";
    CHECK(found);
  }
}

TEST_CASE("conormal of a straight segment points out of the curve") {
  // middle patch of the theta network is the straight segment; at the bottom
  // junction the curve continues upward, so the conormal is (0,-1)
  ClusterMesh mesh = build_reference_cluster({"theta-network", Vec3(1, 1, 1), 16});
  auto nu_bottom = junction_conormals(mesh, 1);
  CHECK(nu_bottom[0].x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(nu_bottom[0].y() == doctest::Approx(-1.0).epsilon(1e-12));
  auto nu_top = junction_conormals(mesh, 0);
  CHECK(nu_top[0].y() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("uniform refinement preserves invariants") {
  for (const char* gen : {"theta-network", "standard-double-bubble"}) {
    ClusterMesh mesh = build_reference_cluster({gen, Vec3(1, 1, 1.2), 16});
    ClusterMesh fine = refine_cluster(mesh);
    CHECK(validate_mesh(fine).ok());
    if (mesh.dim == 1) {
      CHECK(fine.junction.node_count() == mesh.junction.node_count());
    } else {
      CHECK(fine.junction.node_count() == 2 * mesh.junction.node_count());
    }
    for (int i = 0; i < 3; ++i)
      CHECK(fine.patches[i].element_count() ==
            mesh.patches[i].element_count() * (mesh.dim == 1 ? 2 : 4));
  }
}

TEST_CASE("OFF + junction table round trip") {
  ClusterMesh mesh = build_reference_cluster({"standard-double-bubble", Vec3(1, 1, 1), 16});
  std::string stem = "offio_test";
  save_cluster(mesh, stem);
  ClusterMesh back = load_cluster(stem);
  CHECK(back.dim == mesh.dim);
  CHECK(back.junction.node_count() == mesh.junction.node_count());
  for (int i = 0; i < 3; ++i) {
    REQUIRE(back.patches[i].vertex_count() == mesh.patches[i].vertex_count());
    CHECK((back.patches[i].positions - mesh.patches[i].positions).cwiseAbs().maxCoeff() < 1e-15);
  }
  CHECK(validate_mesh(back).ok());
}
