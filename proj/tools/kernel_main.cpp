// Standalone target application for profiling campaigns. Prints nothing on
// success so the profiler times only the work.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ctp/error.hpp"
#include "ctp/synthlab.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Contention-sensitive target kernel", "ctp-kernel"};
  std::size_t work_units = 0;
  std::string io_file;
  bool report = false;
  app.add_option("--work-units", work_units, "Units of work")->required()->check(CLI::PositiveNumber);
  app.add_option("--io-file", io_file, "Scratch file for direct reads");
  app.add_flag("--report", report, "Print the timed seconds");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "ctp-kernel: " << e.what() << '\n' << app.help();
    return 2;
  }
  try {
    ctp::KernelConfig kc;
    if (!io_file.empty()) kc.io_path = io_file;
    const double elapsed = ctp::run_target_kernel(work_units, kc);
    if (report) std::cout << elapsed << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "ctp-kernel: " << e.what() << '\n';
    return 1;
  }
}
