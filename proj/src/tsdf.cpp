#include "nrr/tsdf.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "nrr/parallel.h"

namespace nrr {

namespace {

// Standard marching-cubes tables (Lorensen-Cline configuration tables as
// popularized by Bourke). Corner numbering: 0..3 ring at z, 4..7 ring at
// z+1, corner i vertically adjacent to i+4.
// clang-format off
constexpr int kEdgeTable[256] = {
  0x000, 0x109, 0x203, 0x30a, 0x406, 0x50f, 0x605, 0x70c,
  0x80c, 0x905, 0xa0f, 0xb06, 0xc0a, 0xd03, 0xe09, 0xf00,
  0x190, 0x099, 0x393, 0x29a, 0x596, 0x49f, 0x795, 0x69c,
  0x99c, 0x895, 0xb9f, 0xa96, 0xd9a, 0xc93, 0xf99, 0xe90,
  0x230, 0x339, 0x033, 0x13a, 0x636, 0x73f, 0x435, 0x53c,
  0xa3c, 0xb35, 0x83f, 0x936, 0xe3a, 0xf33, 0xc39, 0xd30,
  0x3a0, 0x2a9, 0x1a3, 0x0aa, 0x7a6, 0x6af, 0x5a5, 0x4ac,
  0xbac, 0xaa5, 0x9af, 0x8a6, 0xfaa, 0xea3, 0xda9, 0xca0,
  0x460, 0x569, 0x663, 0x76a, 0x066, 0x16f, 0x265, 0x36c,
  0xc6c, 0xd65, 0xe6f, 0xf66, 0x86a, 0x963, 0xa69, 0xb60,
  0x5f0, 0x4f9, 0x7f3, 0x6fa, 0x1f6, 0x0ff, 0x3f5, 0x2fc,
  0xdfc, 0xcf5, 0xfff, 0xef6, 0x9fa, 0x8f3, 0xbf9, 0xaf0,
  0x650, 0x759, 0x453, 0x55a, 0x256, 0x35f, 0x055, 0x15c,
  0xe5c, 0xf55, 0xc5f, 0xd56, 0xa5a, 0xb53, 0x859, 0x950,
  0x7c0, 0x6c9, 0x5c3, 0x4ca, 0x3c6, 0x2cf, 0x1c5, 0x0cc,
  0xfcc, 0xec5, 0xdcf, 0xcc6, 0xbca, 0xac3, 0x9c9, 0x8c0,
  0x8c0, 0x9c9, 0xac3, 0xbca, 0xcc6, 0xdcf, 0xec5, 0xfcc,
  0x0cc, 0x1c5, 0x2cf, 0x3c6, 0x4ca, 0x5c3, 0x6c9, 0x7c0,
  0x950, 0x859, 0xb53, 0xa5a, 0xd56, 0xc5f, 0xf55, 0xe5c,
  0x15c, 0x055, 0x35f, 0x256, 0x55a, 0x453, 0x759, 0x650,
  0xaf0, 0xbf9, 0x8f3, 0x9fa, 0xef6, 0xfff, 0xcf5, 0xdfc,
  0x2fc, 0x3f5, 0x0ff, 0x1f6, 0x6fa, 0x7f3, 0x4f9, 0x5f0,
  0xb60, 0xa69, 0x963, 0x86a, 0xf66, 0xe6f, 0xd65, 0xc6c,
  0x36c, 0x265, 0x16f, 0x066, 0x76a, 0x663, 0x569, 0x460,
  0xca0, 0xda9, 0xea3, 0xfaa, 0x8a6, 0x9af, 0xaa5, 0xbac,
  0x4ac, 0x5a5, 0x6af, 0x7a6, 0x0aa, 0x1a3, 0x2a9, 0x3a0,
  0xd30, 0xc39, 0xf33, 0xe3a, 0x936, 0x83f, 0xb35, 0xa3c,
  0x53c, 0x435, 0x73f, 0x636, 0x13a, 0x033, 0x339, 0x230,
  0xe90, 0xf99, 0xc93, 0xd9a, 0xa96, 0xb9f, 0x895, 0x99c,
  0x69c, 0x795, 0x49f, 0x596, 0x29a, 0x393, 0x099, 0x190,
  0xf00, 0xe09, 0xd03, 0xc0a, 0xb06, 0xa0f, 0x905, 0x80c,
  0x70c, 0x605, 0x50f, 0x406, 0x30a, 0x203, 0x109, 0x000};

constexpr int kTriTable[256][16] = {
  {-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {0,8,3,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {0,1,9,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {1,8,3,9,8,1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {1,2,10,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {0,8,3,1,2,10,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {9,2,10,0,2,9,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {2,8,3,2,10,8,10,9,8,-1,-1,-1,-1,-1,-1,-1},
  {3,11,2,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {0,11,2,8,11,0,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {1,9,0,2,3,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {1,11,2,1,9,11,9,8,11,-1,-1,-1,-1,-1,-1,-1},
  {3,10,1,11,10,3,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {0,10,1,0,8,10,8,11,10,-1,-1,-1,-1,-1,-1,-1},
  {3,9,0,3,11,9,11,10,9,-1,-1,-1,-1,-1,-1,-1},
  {9,8,10,10,8,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {4,7,8,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {4,3,0,7,3,4,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {0,1,9,8,4,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {4,1,9,4,7,1,7,3,1,-1,-1,-1,-1,-1,-1,-1},
  {1,2,10,8,4,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {3,4,7,3,0,4,1,2,10,-1,-1,-1,-1,-1,-1,-1},
  {9,2,10,9,0,2,8,4,7,-1,-1,-1,-1,-1,-1,-1},
  {2,10,9,2,9,7,2,7,3,7,9,4,-1,-1,-1,-1},
  {8,4,7,3,11,2,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {11,4,7,11,2,4,2,0,4,-1,-1,-1,-1,-1,-1,-1},
  {9,0,1,8,4,7,2,3,11,-1,-1,-1,-1,-1,-1,-1},
  {4,7,11,9,4,11,9,11,2,9,2,1,-1,-1,-1,-1},
  {3,10,1,3,11,10,7,8,4,-1,-1,-1,-1,-1,-1,-1},
  {1,11,10,1,4,11,1,0,4,7,11,4,-1,-1,-1,-1},
  {4,7,8,9,0,11,9,11,10,11,0,3,-1,-1,-1,-1},
  {4,7,11,4,11,9,9,11,10,-1,-1,-1,-1,-1,-1,-1},
  {9,5,4,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {9,5,4,0,8,3,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {0,5,4,1,5,0,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {8,5,4,8,3,5,3,1,5,-1,-1,-1,-1,-1,-1,-1},
  {1,2,10,9,5,4,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {3,0,8,1,2,10,4,9,5,-1,-1,-1,-1,-1,-1,-1},
  {5,2,10,5,4,2,4,0,2,-1,-1,-1,-1,-1,-1,-1},
  {2,10,5,3,2,5,3,5,4,3,4,8,-1,-1,-1,-1},
  {9,5,4,2,3,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {0,11,2,0,8,11,4,9,5,-1,-1,-1,-1,-1,-1,-1},
  {0,5,4,0,1,5,2,3,11,-1,-1,-1,-1,-1,-1,-1},
  {2,1,5,2,5,8,2,8,11,4,8,5,-1,-1,-1,-1},
  {10,3,11,10,1,3,9,5,4,-1,-1,-1,-1,-1,-1,-1},
  {4,9,5,0,8,1,8,10,1,8,11,10,-1,-1,-1,-1},
  {5,4,0,5,0,11,5,11,10,11,0,3,-1,-1,-1,-1},
  {5,4,8,5,8,10,10,8,11,-1,-1,-1,-1,-1,-1,-1},
  {9,7,8,5,7,9,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {9,3,0,9,5,3,5,7,3,-1,-1,-1,-1,-1,-1,-1},
  {0,7,8,0,1,7,1,5,7,-1,-1,-1,-1,-1,-1,-1},
  {1,5,3,3,5,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {9,7,8,9,5,7,10,1,2,-1,-1,-1,-1,-1,-1,-1},
  {10,1,2,9,5,0,5,3,0,5,7,3,-1,-1,-1,-1},
  {8,0,2,8,2,5,8,5,7,10,5,2,-1,-1,-1,-1},
  {2,10,5,2,5,3,3,5,7,-1,-1,-1,-1,-1,-1,-1},
  {7,9,5,7,8,9,3,11,2,-1,-1,-1,-1,-1,-1,-1},
  {9,5,7,9,7,2,9,2,0,2,7,11,-1,-1,-1,-1},
  {2,3,11,0,1,8,1,7,8,1,5,7,-1,-1,-1,-1},
  {11,2,1,11,1,7,7,1,5,-1,-1,-1,-1,-1,-1,-1},
  {9,5,8,8,5,7,10,1,3,10,3,11,-1,-1,-1,-1},
  {5,7,0,5,0,9,7,11,0,1,0,10,11,10,0,-1},
  {11,10,0,11,0,3,10,5,0,8,0,7,5,7,0,-1},
  {11,10,5,7,11,5,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {10,6,5,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {0,8,3,5,10,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {9,0,1,5,10,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {1,8,3,1,9,8,5,10,6,-1,-1,-1,-1,-1,-1,-1},
  {1,6,5,2,6,1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {1,6,5,1,2,6,3,0,8,-1,-1,-1,-1,-1,-1,-1},
  {9,6,5,9,0,6,0,2,6,-1,-1,-1,-1,-1,-1,-1},
  {5,9,8,5,8,2,5,2,6,3,2,8,-1,-1,-1,-1},
  {2,3,11,10,6,5,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {11,0,8,11,2,0,10,6,5,-1,-1,-1,-1,-1,-1,-1},
  {0,1,9,2,3,11,5,10,6,-1,-1,-1,-1,-1,-1,-1},
  {5,10,6,1,9,2,9,11,2,9,8,11,-1,-1,-1,-1},
  {6,3,11,6,5,3,5,1,3,-1,-1,-1,-1,-1,-1,-1},
  {0,8,11,0,11,5,0,5,1,5,11,6,-1,-1,-1,-1},
  {3,11,6,0,3,6,0,6,5,0,5,9,-1,-1,-1,-1},
  {6,5,9,6,9,11,11,9,8,-1,-1,-1,-1,-1,-1,-1},
  {5,10,6,4,7,8,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {4,3,0,4,7,3,6,5,10,-1,-1,-1,-1,-1,-1,-1},
  {1,9,0,5,10,6,8,4,7,-1,-1,-1,-1,-1,-1,-1},
  {10,6,5,1,9,7,1,7,3,7,9,4,-1,-1,-1,-1},
  {6,1,2,6,5,1,4,7,8,-1,-1,-1,-1,-1,-1,-1},
  {1,2,5,5,2,6,3,0,4,3,4,7,-1,-1,-1,-1},
  {8,4,7,9,0,5,0,6,5,0,2,6,-1,-1,-1,-1},
  {7,3,9,7,9,4,3,2,9,5,9,6,2,6,9,-1},
  {3,11,2,7,8,4,10,6,5,-1,-1,-1,-1,-1,-1,-1},
  {5,10,6,4,7,2,4,2,0,2,7,11,-1,-1,-1,-1},
  {0,1,9,4,7,8,2,3,11,5,10,6,-1,-1,-1,-1},
  {9,2,1,9,11,2,9,4,11,7,11,4,5,10,6,-1},
  {8,4,7,3,11,5,3,5,1,5,11,6,-1,-1,-1,-1},
  {5,1,11,5,11,6,1,0,11,7,11,4,0,4,11,-1},
  {0,5,9,0,6,5,0,3,6,11,6,3,8,4,7,-1},
  {6,5,9,6,9,11,4,7,9,7,11,9,-1,-1,-1,-1},
  {10,4,9,6,4,10,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {4,10,6,4,9,10,0,8,3,-1,-1,-1,-1,-1,-1,-1},
  {10,0,1,10,6,0,6,4,0,-1,-1,-1,-1,-1,-1,-1},
  {8,3,1,8,1,6,8,6,4,6,1,10,-1,-1,-1,-1},
  {1,4,9,1,2,4,2,6,4,-1,-1,-1,-1,-1,-1,-1},
  {3,0,8,1,2,9,2,4,9,2,6,4,-1,-1,-1,-1},
  {0,2,4,4,2,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {8,3,2,8,2,4,4,2,6,-1,-1,-1,-1,-1,-1,-1},
  {10,4,9,10,6,4,11,2,3,-1,-1,-1,-1,-1,-1,-1},
  {0,8,2,2,8,11,4,9,10,4,10,6,-1,-1,-1,-1},
  {3,11,2,0,1,6,0,6,4,6,1,10,-1,-1,-1,-1},
  {6,4,1,6,1,10,4,8,1,2,1,11,8,11,1,-1},
  {9,6,4,9,3,6,9,1,3,11,6,3,-1,-1,-1,-1},
  {8,11,1,8,1,0,11,6,1,9,1,4,6,4,1,-1},
  {3,11,6,3,6,0,0,6,4,-1,-1,-1,-1,-1,-1,-1},
  {6,4,8,11,6,8,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {7,10,6,7,8,10,8,9,10,-1,-1,-1,-1,-1,-1,-1},
  {0,7,3,0,10,7,0,9,10,6,7,10,-1,-1,-1,-1},
  {10,6,7,1,10,7,1,7,8,1,8,0,-1,-1,-1,-1},
  {10,6,7,10,7,1,1,7,3,-1,-1,-1,-1,-1,-1,-1},
  {1,2,6,1,6,8,1,8,9,8,6,7,-1,-1,-1,-1},
  {2,6,9,2,9,1,6,7,9,0,9,3,7,3,9,-1},
  {7,8,0,7,0,6,6,0,2,-1,-1,-1,-1,-1,-1,-1},
  {7,3,2,6,7,2,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {2,3,11,10,6,8,10,8,9,8,6,7,-1,-1,-1,-1},
  {2,0,7,2,7,11,0,9,7,6,7,10,9,10,7,-1},
  {1,8,0,1,7,8,1,10,7,6,7,10,2,3,11,-1},
  {11,2,1,11,1,7,10,6,1,6,7,1,-1,-1,-1,-1},
  {8,9,6,8,6,7,9,1,6,11,6,3,1,3,6,-1},
  {0,9,1,11,6,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {7,8,0,7,0,6,3,11,0,11,6,0,-1,-1,-1,-1},
  {7,11,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {7,6,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {3,0,8,11,7,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {0,1,9,11,7,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {8,1,9,8,3,1,11,7,6,-1,-1,-1,-1,-1,-1,-1},
  {10,1,2,6,11,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {1,2,10,3,0,8,6,11,7,-1,-1,-1,-1,-1,-1,-1},
  {2,9,0,2,10,9,6,11,7,-1,-1,-1,-1,-1,-1,-1},
  {6,11,7,2,10,3,10,8,3,10,9,8,-1,-1,-1,-1},
  {7,2,3,6,2,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {7,0,8,7,6,0,6,2,0,-1,-1,-1,-1,-1,-1,-1},
  {2,7,6,2,3,7,0,1,9,-1,-1,-1,-1,-1,-1,-1},
  {1,6,2,1,8,6,1,9,8,8,7,6,-1,-1,-1,-1},
  {10,7,6,10,1,7,1,3,7,-1,-1,-1,-1,-1,-1,-1},
  {10,7,6,1,7,10,1,8,7,1,0,8,-1,-1,-1,-1},
  {0,3,7,0,7,10,0,10,9,6,10,7,-1,-1,-1,-1},
  {7,6,10,7,10,8,8,10,9,-1,-1,-1,-1,-1,-1,-1},
  {6,8,4,11,8,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {3,6,11,3,0,6,0,4,6,-1,-1,-1,-1,-1,-1,-1},
  {8,6,11,8,4,6,9,0,1,-1,-1,-1,-1,-1,-1,-1},
  {9,4,6,9,6,3,9,3,1,11,3,6,-1,-1,-1,-1},
  {6,8,4,6,11,8,2,10,1,-1,-1,-1,-1,-1,-1,-1},
  {1,2,10,3,0,11,0,6,11,0,4,6,-1,-1,-1,-1},
  {4,11,8,4,6,11,0,2,9,2,10,9,-1,-1,-1,-1},
  {10,9,3,10,3,2,9,4,3,11,3,6,4,6,3,-1},
  {8,2,3,8,4,2,4,6,2,-1,-1,-1,-1,-1,-1,-1},
  {0,4,2,4,6,2,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {1,9,0,2,3,4,2,4,6,4,3,8,-1,-1,-1,-1},
  {1,9,4,1,4,2,2,4,6,-1,-1,-1,-1,-1,-1,-1},
  {8,1,3,8,6,1,8,4,6,6,10,1,-1,-1,-1,-1},
  {10,1,0,10,0,6,6,0,4,-1,-1,-1,-1,-1,-1,-1},
  {4,6,3,4,3,8,6,10,3,0,3,9,10,9,3,-1},
  {10,9,4,6,10,4,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {4,9,5,7,6,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {0,8,3,4,9,5,11,7,6,-1,-1,-1,-1,-1,-1,-1},
  {5,0,1,5,4,0,7,6,11,-1,-1,-1,-1,-1,-1,-1},
  {11,7,6,8,3,4,3,5,4,3,1,5,-1,-1,-1,-1},
  {9,5,4,10,1,2,7,6,11,-1,-1,-1,-1,-1,-1,-1},
  {6,11,7,1,2,10,0,8,3,4,9,5,-1,-1,-1,-1},
  {7,6,11,5,4,10,4,2,10,4,0,2,-1,-1,-1,-1},
  {3,4,8,3,5,4,3,2,5,10,5,2,11,7,6,-1},
  {7,2,3,7,6,2,5,4,9,-1,-1,-1,-1,-1,-1,-1},
  {9,5,4,0,8,6,0,6,2,6,8,7,-1,-1,-1,-1},
  {3,6,2,3,7,6,1,5,0,5,4,0,-1,-1,-1,-1},
  {6,2,8,6,8,7,2,1,8,4,8,5,1,5,8,-1},
  {9,5,4,10,1,6,1,7,6,1,3,7,-1,-1,-1,-1},
  {1,6,10,1,7,6,1,0,7,8,7,0,9,5,4,-1},
  {4,0,10,4,10,5,0,3,10,6,10,7,3,7,10,-1},
  {7,6,10,7,10,8,5,4,10,4,8,10,-1,-1,-1,-1},
  {6,9,5,6,11,9,11,8,9,-1,-1,-1,-1,-1,-1,-1},
  {3,6,11,0,6,3,0,5,6,0,9,5,-1,-1,-1,-1},
  {0,11,8,0,5,11,0,1,5,5,6,11,-1,-1,-1,-1},
  {6,11,3,6,3,5,5,3,1,-1,-1,-1,-1,-1,-1,-1},
  {1,2,10,9,5,11,9,11,8,11,5,6,-1,-1,-1,-1},
  {0,11,3,0,6,11,0,9,6,5,6,9,1,2,10,-1},
  {11,8,5,11,5,6,8,0,5,10,5,2,0,2,5,-1},
  {6,11,3,6,3,5,2,10,3,10,5,3,-1,-1,-1,-1},
  {5,8,9,5,2,8,5,6,2,3,8,2,-1,-1,-1,-1},
  {9,5,6,9,6,0,0,6,2,-1,-1,-1,-1,-1,-1,-1},
  {1,5,8,1,8,0,5,6,8,3,8,2,6,2,8,-1},
  {1,5,6,2,1,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {1,3,6,1,6,10,3,8,6,5,6,9,8,9,6,-1},
  {10,1,0,10,0,6,9,5,0,5,6,0,-1,-1,-1,-1},
  {0,3,8,5,6,10,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {10,5,6,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {11,5,10,7,5,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {11,5,10,11,7,5,8,3,0,-1,-1,-1,-1,-1,-1,-1},
  {5,11,7,5,10,11,1,9,0,-1,-1,-1,-1,-1,-1,-1},
  {10,7,5,10,11,7,9,8,1,8,3,1,-1,-1,-1,-1},
  {11,1,2,11,7,1,7,5,1,-1,-1,-1,-1,-1,-1,-1},
  {0,8,3,1,2,7,1,7,5,7,2,11,-1,-1,-1,-1},
  {9,7,5,9,2,7,9,0,2,2,11,7,-1,-1,-1,-1},
  {7,5,2,7,2,11,5,9,2,3,2,8,9,8,2,-1},
  {2,5,10,2,3,5,3,7,5,-1,-1,-1,-1,-1,-1,-1},
  {8,2,0,8,5,2,8,7,5,10,2,5,-1,-1,-1,-1},
  {9,0,1,5,10,3,5,3,7,3,10,2,-1,-1,-1,-1},
  {9,8,2,9,2,1,8,7,2,10,2,5,7,5,2,-1},
  {1,3,5,3,7,5,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {0,8,7,0,7,1,1,7,5,-1,-1,-1,-1,-1,-1,-1},
  {9,0,3,9,3,5,5,3,7,-1,-1,-1,-1,-1,-1,-1},
  {9,8,7,5,9,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {5,8,4,5,10,8,10,11,8,-1,-1,-1,-1,-1,-1,-1},
  {5,0,4,5,11,0,5,10,11,11,3,0,-1,-1,-1,-1},
  {0,1,9,8,4,10,8,10,11,10,4,5,-1,-1,-1,-1},
  {10,11,4,10,4,5,11,3,4,9,4,1,3,1,4,-1},
  {2,5,1,2,8,5,2,11,8,4,5,8,-1,-1,-1,-1},
  {0,4,11,0,11,3,4,5,11,2,11,1,5,1,11,-1},
  {0,2,5,0,5,9,2,11,5,4,5,8,11,8,5,-1},
  {9,4,5,2,11,3,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {2,5,10,3,5,2,3,4,5,3,8,4,-1,-1,-1,-1},
  {5,10,2,5,2,4,4,2,0,-1,-1,-1,-1,-1,-1,-1},
  {3,10,2,3,5,10,3,8,5,4,5,8,0,1,9,-1},
  {5,10,2,5,2,4,1,9,2,9,4,2,-1,-1,-1,-1},
  {8,4,5,8,5,3,3,5,1,-1,-1,-1,-1,-1,-1,-1},
  {0,4,5,1,0,5,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {8,4,5,8,5,3,9,0,5,0,3,5,-1,-1,-1,-1},
  {9,4,5,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {4,11,7,4,9,11,9,10,11,-1,-1,-1,-1,-1,-1,-1},
  {0,8,3,4,9,7,9,11,7,9,10,11,-1,-1,-1,-1},
  {1,10,11,1,11,4,1,4,0,7,4,11,-1,-1,-1,-1},
  {3,1,4,3,4,8,1,10,4,7,4,11,10,11,4,-1},
  {4,11,7,9,11,4,9,2,11,9,1,2,-1,-1,-1,-1},
  {9,7,4,9,11,7,9,1,11,2,11,1,0,8,3,-1},
  {11,7,4,11,4,2,2,4,0,-1,-1,-1,-1,-1,-1,-1},
  {11,7,4,11,4,2,8,3,4,3,2,4,-1,-1,-1,-1},
  {2,9,10,2,7,9,2,3,7,7,4,9,-1,-1,-1,-1},
  {9,10,7,9,7,4,10,2,7,8,7,0,2,0,7,-1},
  {3,7,10,3,10,2,7,4,10,1,10,0,4,0,10,-1},
  {1,10,2,8,7,4,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {4,9,1,4,1,7,7,1,3,-1,-1,-1,-1,-1,-1,-1},
  {4,9,1,4,1,7,0,8,1,8,7,1,-1,-1,-1,-1},
  {4,0,3,7,4,3,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {4,8,7,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {9,10,8,10,11,8,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {3,0,9,3,9,11,11,9,10,-1,-1,-1,-1,-1,-1,-1},
  {0,1,10,0,10,8,8,10,11,-1,-1,-1,-1,-1,-1,-1},
  {3,1,10,11,3,10,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {1,2,11,1,11,9,9,11,8,-1,-1,-1,-1,-1,-1,-1},
  {3,0,9,3,9,11,1,2,9,2,11,9,-1,-1,-1,-1},
  {0,2,11,8,0,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {3,2,11,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {2,3,8,2,8,10,10,8,9,-1,-1,-1,-1,-1,-1,-1},
  {9,10,2,0,9,2,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {2,3,8,2,8,10,0,1,8,1,10,8,-1,-1,-1,-1},
  {1,10,2,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {1,3,8,9,1,8,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {0,9,1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {0,3,8,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1},
  {-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1}};
// clang-format on

constexpr int kCornerOffset[8][3] = {
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
    {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};

// Edge -> (corner a, corner b).
constexpr int kEdgeCorner[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0},
                                    {4, 5}, {5, 6}, {6, 7}, {7, 4},
                                    {0, 4}, {1, 5}, {2, 6}, {3, 7}};

}  // namespace

TsdfVolume::TsdfVolume(const Vec3d& origin, double voxel_size,
                       const Vec3i& dims, double truncation, float max_weight)
    : origin_(origin), voxel_size_(voxel_size), dims_(dims),
      truncation_(truncation), max_weight_(max_weight) {
  if (!(voxel_size > 0.0) || !(truncation > 0.0))
    throw std::invalid_argument("tsdf: voxel size and truncation must be > 0");
  if (dims.x() < 2 || dims.y() < 2 || dims.z() < 2)
    throw std::invalid_argument("tsdf: dims must be at least 2^3");
  const std::size_t n = static_cast<std::size_t>(dims.x()) * dims.y() *
                        static_cast<std::size_t>(dims.z());
  tsdf_.assign(n, 0.0f);
  weight_.assign(n, 0.0f);
}

TsdfVolume TsdfVolume::around_box(const Vec3d& lo, const Vec3d& hi,
                                  const TsdfConfig& config) {
  const double trunc = config.voxel_size * config.truncation_voxels;
  const double margin = trunc + 2.0 * config.voxel_size;
  const Vec3d origin = lo.array() - margin;
  const Vec3d extent = (hi - lo).array() + 2.0 * margin;
  Vec3i dims;
  for (int c = 0; c < 3; ++c)
    dims[c] = std::max(2, int(std::ceil(extent[c] / config.voxel_size)) + 1);
  return TsdfVolume(origin, config.voxel_size, dims, trunc,
                    config.max_weight);
}

Vec3d TsdfVolume::voxel_center(int i, int j, int k) const {
  return origin_ + voxel_size_ * Vec3d(i, j, k);
}

void TsdfVolume::integrate(const RgbdFrame& frame,
                           const DeformationGraph& graph, const VecXd& params,
                           const ImageU8* mask) {
  const bool warped = graph.node_count() > 0;
  const NodeTransforms tf =
      warped ? NodeTransforms::build(graph, params, false) : NodeTransforms{};
  const CameraIntrinsics& K = frame.intrinsics;
  const int nx = dims_.x(), ny = dims_.y();

  parallel_for(static_cast<std::size_t>(dims_.z()), [&](std::size_t kz) {
    const int k = static_cast<int>(kz);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        Vec3d c = voxel_center(i, j, k);
        if (warped) {
          const SkinningWeights w = skinning(graph, c, 4);
          c = warp_point(graph, tf, params, w, c);
        }
        if (c.z() <= 0.0) continue;
        const auto px = try_project(c, K);
        if (!px) continue;
        const int u = static_cast<int>(std::lround(px->x()));
        const int v = static_cast<int>(std::lround(px->y()));
        if (!frame.depth.in_bounds(u, v)) continue;
        if (mask && mask->at(u, v) == 0) continue;
        const double d = frame.depth.at(u, v);
        if (d <= 0.0) continue;
        const double sdf = d - c.z();
        if (sdf < -truncation_) continue;  // behind-surface culling
        const float sdf_norm =
            static_cast<float>(std::clamp(sdf / truncation_, -1.0, 1.0));
        const std::size_t idx = index(i, j, k);
        const float w_old = std::min(weight_[idx], max_weight_);
        const float alpha = 1.0f / (w_old + 1.0f);
        tsdf_[idx] = (1.0f - alpha) * tsdf_[idx] + alpha * sdf_norm;
        weight_[idx] = std::min(weight_[idx] + 1.0f, max_weight_);
      }
  });
}

void TsdfVolume::integrate(const RgbdFrame& frame) {
  integrate(frame, DeformationGraph{}, VecXd(), nullptr);
}

SurfaceMesh TsdfVolume::extract_mesh() const {
  SurfaceMesh mesh;
  // Global edge ids -> mesh vertex index, so neighbouring cubes share
  // isosurface vertices.
  std::unordered_map<std::uint64_t, int> edge_vertex;
  const auto edge_key = [&](int i, int j, int k, int axis) {
    const std::uint64_t linear =
        (static_cast<std::uint64_t>(k) * dims_.y() + j) * dims_.x() + i;
    return linear * 3 + axis;
  };
  const auto gradient = [&](int i, int j, int k) {
    const auto sample = [&](int a, int b, int c) {
      a = std::clamp(a, 0, dims_.x() - 1);
      b = std::clamp(b, 0, dims_.y() - 1);
      c = std::clamp(c, 0, dims_.z() - 1);
      return double(tsdf_[index(a, b, c)]);
    };
    return Vec3d(sample(i + 1, j, k) - sample(i - 1, j, k),
                 sample(i, j + 1, k) - sample(i, j - 1, k),
                 sample(i, j, k + 1) - sample(i, j, k - 1));
  };

  // axis of each cube edge and the corner at the lower coordinate along it.
  static constexpr int kEdgeAxis[12] = {0, 1, 0, 1, 0, 1, 0, 1, 2, 2, 2, 2};
  static constexpr int kEdgeBase[12] = {0, 1, 3, 0, 4, 5, 7, 4, 0, 1, 2, 3};

  for (int k = 0; k + 1 < dims_.z(); ++k)
    for (int j = 0; j + 1 < dims_.y(); ++j)
      for (int i = 0; i + 1 < dims_.x(); ++i) {
        float value[8];
        bool observed = true;
        for (int c = 0; c < 8; ++c) {
          const int ci = i + kCornerOffset[c][0];
          const int cj = j + kCornerOffset[c][1];
          const int ck = k + kCornerOffset[c][2];
          if (weight_[index(ci, cj, ck)] <= 0.0f) {
            observed = false;
            break;
          }
          value[c] = tsdf_[index(ci, cj, ck)];
        }
        if (!observed) continue;
        int cube = 0;
        for (int c = 0; c < 8; ++c)
          if (value[c] < 0.0f) cube |= (1 << c);
        const int edges = kEdgeTable[cube];
        if (edges == 0) continue;

        int edge_to_vertex[12];
        for (int e = 0; e < 12; ++e) {
          if (!(edges & (1 << e))) continue;
          const int a = kEdgeCorner[e][0], b = kEdgeCorner[e][1];
          const int base = kEdgeBase[e];
          const int bi = i + kCornerOffset[base][0];
          const int bj = j + kCornerOffset[base][1];
          const int bk = k + kCornerOffset[base][2];
          const std::uint64_t key = edge_key(bi, bj, bk, kEdgeAxis[e]);
          auto it = edge_vertex.find(key);
          if (it != edge_vertex.end()) {
            edge_to_vertex[e] = it->second;
            continue;
          }
          const double fa = value[a], fb = value[b];
          double t = 0.5;
          if (std::abs(fa - fb) > 1e-12) t = fa / (fa - fb);
          t = std::clamp(t, 0.0, 1.0);
          const Vec3d pa = voxel_center(i + kCornerOffset[a][0],
                                        j + kCornerOffset[a][1],
                                        k + kCornerOffset[a][2]);
          const Vec3d pb = voxel_center(i + kCornerOffset[b][0],
                                        j + kCornerOffset[b][1],
                                        k + kCornerOffset[b][2]);
          const int vid = static_cast<int>(mesh.vertices.size());
          mesh.vertices.push_back(pa + t * (pb - pa));
          const Vec3d ga = gradient(i + kCornerOffset[a][0],
                                    j + kCornerOffset[a][1],
                                    k + kCornerOffset[a][2]);
          const Vec3d gb = gradient(i + kCornerOffset[b][0],
                                    j + kCornerOffset[b][1],
                                    k + kCornerOffset[b][2]);
          Vec3d n = ga + t * (gb - ga);
          const double len = n.norm();
          mesh.normals.push_back(len > 1e-12 ? Vec3d(n / len)
                                             : Vec3d(0, 0, -1));
          mesh.source_pixel.push_back({-1, -1});
          edge_vertex.emplace(key, vid);
          edge_to_vertex[e] = vid;
        }

        for (int t = 0; kTriTable[cube][t] != -1; t += 3)
          mesh.triangles.push_back({edge_to_vertex[kTriTable[cube][t]],
                                    edge_to_vertex[kTriTable[cube][t + 1]],
                                    edge_to_vertex[kTriTable[cube][t + 2]]});
      }
  return mesh;
}

SurfaceMesh warp_mesh(const SurfaceMesh& mesh, const DeformationGraph& graph,
                      const VecXd& params, int skin_k) {
  SurfaceMesh out = mesh;
  const NodeTransforms tf = NodeTransforms::build(graph, params, false);
  parallel_for(mesh.vertices.size(), [&](std::size_t i) {
    const SkinningWeights w = skinning(graph, mesh.vertices[i], skin_k);
    out.vertices[i] = warp_point(graph, tf, params, w, mesh.vertices[i]);
    out.normals[i] = warp_direction(tf, w, mesh.normals[i]);
  });
  return out;
}

}  // namespace nrr
