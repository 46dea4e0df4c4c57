// Acceptance battery: runs every criterion scenario at its stated size and
// tolerance, printing one PASS/FAIL line per criterion.
#include <cstdio>
#include <cstring>
#include <string>

#include "tvflow/experiments.hpp"

int main(int argc, char** argv) {
  int criterion = 0;
  std::string out = tvflow::default_output_root() + "/acceptance";
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      criterion = std::atoi(argv[++i]);
    } else if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc) {
      out = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N] [--out DIR]\n");
      return 2;
    }
  }
  const int failures = tvflow::run_verification("full", out, criterion);
  if (criterion == 0)
    std::printf("acceptance: %d criteria failing\n", failures);
  return failures == 0 ? 0 : 1;
}
