#include "geodiff/generators.hpp"

#include <cmath>
#include <map>

namespace geodiff {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Grid faces for an (nx+1) x (ny+1) lattice indexed i + (nx+1) j; diagonals alternate.
std::vector<std::array<int, 3>> grid_faces(int nx, int ny) {
  std::vector<std::array<int, 3>> F;
  auto id = [&](int i, int j) { return i + (nx + 1) * j; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if ((i + j) % 2 == 0) {
        F.push_back({a, b, c});
        F.push_back({a, c, d});
      } else {
        F.push_back({a, b, d});
        F.push_back({b, c, d});
      }
    }
  return F;
}

}  // namespace

TriangleMesh make_grid(int nx, int ny, double sx, double sy) {
  std::vector<Vec3> V;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) V.emplace_back(sx * i / nx, sy * j / ny, 0.0);
  return TriangleMesh::build(std::move(V), grid_faces(nx, ny));
}

TriangleMesh make_square() {
  std::vector<Vec3> V{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  return TriangleMesh::build(std::move(V), {{0, 1, 2}, {0, 2, 3}});
}

TriangleMesh make_icosphere(int level) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> V{{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                      {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : V) v.normalize();
  std::vector<std::array<int, 3>> F{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                    {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                    {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                    {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      V.push_back((V[a] + V[b]).normalized());
      int id = static_cast<int>(V.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> G;
    for (const auto& f : F) {
      int a = midpoint(f[0], f[1]), b = midpoint(f[1], f[2]), c = midpoint(f[2], f[0]);
      G.push_back({f[0], a, c});
      G.push_back({f[1], b, a});
      G.push_back({f[2], c, b});
      G.push_back({a, b, c});
    }
    F = std::move(G);
  }
  return TriangleMesh::build(std::move(V), std::move(F));
}

TriangleMesh make_cube(int n) {
  std::vector<Vec3> V;
  std::vector<std::array<int, 3>> F;
  std::map<std::array<long, 3>, int> index;
  auto vid = [&](const Vec3& p) {
    std::array<long, 3> key{std::lround(p.x() * n * 4), std::lround(p.y() * n * 4), std::lround(p.z() * n * 4)};
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    V.push_back(p);
    int id = static_cast<int>(V.size()) - 1;
    index.emplace(key, id);
    return id;
  };
  // Each side: origin o, in-plane axes u, v with u x v pointing outward.
  const std::array<std::array<Vec3, 3>, 6> sides{{
      {Vec3(1, -1, -1), Vec3(0, 2, 0), Vec3(0, 0, 2)},
      {Vec3(-1, -1, -1), Vec3(0, 0, 2), Vec3(0, 2, 0)},
      {Vec3(-1, 1, -1), Vec3(0, 0, 2), Vec3(2, 0, 0)},
      {Vec3(-1, -1, -1), Vec3(2, 0, 0), Vec3(0, 0, 2)},
      {Vec3(-1, -1, 1), Vec3(2, 0, 0), Vec3(0, 2, 0)},
      {Vec3(-1, -1, -1), Vec3(0, 2, 0), Vec3(2, 0, 0)},
  }};
  for (const auto& s : sides) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        auto P = [&](int a, int b) { return vid(s[0] + s[1] * (double(a) / n) + s[2] * (double(b) / n)); };
        int a = P(i, j), b = P(i + 1, j), c = P(i + 1, j + 1), d = P(i, j + 1);
        if ((i + j) % 2 == 0) {
          F.push_back({a, b, c});
          F.push_back({a, c, d});
        } else {
          F.push_back({a, b, d});
          F.push_back({b, c, d});
        }
      }
  }
  return TriangleMesh::build(std::move(V), std::move(F));
}

TriangleMesh make_fold(int n) {
  std::vector<Vec3> V;
  const int nx = 2 * n;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= nx; ++i) {
      double u = -1.0 + double(i) / n;
      double y = double(j) / n;
      V.push_back(u >= 0 ? Vec3(u, y, 0.0) : Vec3(0.0, y, -u));
    }
  return TriangleMesh::build(std::move(V), grid_faces(nx, n));
}

TriangleMesh make_torus(double R, double r, int nu, int nv) {
  std::vector<Vec3> V;
  std::vector<std::array<int, 3>> F;
  auto id = [&](int i, int j) { return (i % nu) + nu * (j % nv); };
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nu; ++i) {
      double u = 2 * kPi * i / nu, v = 2 * kPi * j / nv;
      V.emplace_back((R + r * std::cos(v)) * std::cos(u), (R + r * std::cos(v)) * std::sin(u), r * std::sin(v));
    }
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nu; ++i) {
      int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      F.push_back({a, b, c});
      F.push_back({a, c, d});
    }
  return TriangleMesh::build(std::move(V), std::move(F));
}

TriangleMesh make_saddle(int n, double h) {
  std::vector<Vec3> V;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      double x = -1.0 + 2.0 * i / n, y = -1.0 + 2.0 * j / n;
      V.emplace_back(x, y, h * (x * x - y * y));
    }
  return TriangleMesh::build(std::move(V), grid_faces(n, n));
}

TriangleMesh make_named_mesh(const std::string& kind) {
  if (kind == "grid") return make_grid(8, 8);
  if (kind == "square") return make_square();
  if (kind.rfind("icosphere", 0) == 0 && kind.size() == 10 && kind[9] >= '0' && kind[9] <= '5')
    return make_icosphere(kind[9] - '0');
  if (kind == "cube") return make_cube(6);
  if (kind == "fold") return make_fold(6);
  if (kind == "torus") return make_torus(1.0, 0.4, 32, 16);
  if (kind == "saddle") return make_saddle(8, 0.8);
  throw ConfigError("unknown mesh kind '" + kind + "'");
}

}  // namespace geodiff
