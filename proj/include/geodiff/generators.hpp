#pragma once

#include <string>

#include "geodiff/mesh.hpp"

namespace geodiff {

// nx by ny quads on [0,sx] x [0,sy] in the z=0 plane, two triangles each.
TriangleMesh make_grid(int nx, int ny, double sx = 1.0, double sy = 1.0);
TriangleMesh make_square();
// Unit icosphere; level 0 has 20 faces, level 3 has 1280.
TriangleMesh make_icosphere(int level);
// Axis-aligned cube [-1,1]^3 with n by n quads per side.
TriangleMesh make_cube(int n);
// Two unit panels meeting at a right angle along the y axis:
// (u, y, 0) for u >= 0 and (0, y, -u) for u < 0, with n quads per panel side.
TriangleMesh make_fold(int n);
TriangleMesh make_torus(double R, double r, int nu, int nv);
// Graph of z = h (x^2 - y^2) on [-1,1]^2 with an n by n grid (n even keeps a
// vertex at the origin, which is hyperbolic for h > 0).
TriangleMesh make_saddle(int n, double h);

// Named generator used by the command line: grid, square, icosphere0..icosphere3,
// cube, fold, torus, saddle.
TriangleMesh make_named_mesh(const std::string& kind);

}  // namespace geodiff
