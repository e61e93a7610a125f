// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "ccseg/cli/cli.hpp"
#include "ccseg/verify/acceptance.hpp"

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  ccseg::verify::SuiteOptions o;
  o.work_dir = fs::temp_directory_path() / "ccseg_acceptance";
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--work-dir") {
      o.work_dir = argv[i + 1];
    } else if (flag == "--seed") {
      o.seed = std::stoull(argv[i + 1]);
    } else {
      std::cerr << "usage: acceptance [--work-dir DIR] [--seed N]\n";
      return 1;
    }
  }
  fs::remove_all(o.work_dir);
  fs::create_directories(o.work_dir);
  o.run_cli = [](const std::vector<std::string>& args) {
    std::ostringstream out;
    return ccseg::cli::run(args, out, std::cerr);
  };

  int failed = 0;
  for (int id = 1; id <= ccseg::verify::kCriteria; ++id) {
    const auto r = ccseg::verify::run_check(id, o);
    std::cout << ccseg::verify::format_line(r) << std::endl;
    if (!r.passed) ++failed;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
