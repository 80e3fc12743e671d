#include <cstdio>

#include <ebgevrey/ebgevrey.hpp>

int main(int argc, char** argv) {
  using namespace ebgevrey;
  const BeamConfig c = argc > 1 ? load_config(argv[1], DampingPolicy::allow_zero_damping) : default_config();
  acceptance::Options opt;
  int failed = 0;
  for (const auto& cr : acceptance::criteria()) {
    const auto out = acceptance::run(cr, c, opt);
    std::printf("%s\n", acceptance::summary_line(out).c_str());
    std::fflush(stdout);
    failed += out.status == acceptance::Status::fail;
  }
  std::printf("%d of %zu criteria failed\n", failed, acceptance::criteria().size());
  return failed == 0 ? 0 : 1;
}
