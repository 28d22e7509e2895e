#ifndef ANGVOL_TESTS_FIXTURES_HPP
#define ANGVOL_TESTS_FIXTURES_HPP

#include "angvol/normal_surfaces.hpp"
#include "angvol/triangulation.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace angvol::testing {

inline std::string read_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Triangulation fixture(const std::string& name)
{
  return parse_triangulation(read_file(std::string(ANGVOL_FIXTURE_DIR) + "/" + name + ".tri"));
}

inline const std::vector<std::string>& fixture_names()
{
  static const std::vector<std::string> names{"double_tet", "figure8", "folded3", "random3", "random4", "random5", "random6"};
  return names;
}

/// Fixtures with smooth points, i.e. without an angle-rigid quad.
inline const std::vector<std::string>& smooth_fixture_names()
{
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& n : fixture_names())
      if (rigidity_report(fixture(n)).angle_rigid.empty()) out.push_back(n);
    return out;
  }();
  return names;
}

}  // namespace angvol::testing

#endif
