#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "wmdlab/cli/commands.hpp"

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("wmdlab"));
  spdlog::set_pattern("[%l] %v");
  return wmdlab::cli::run(argc, argv);
}
