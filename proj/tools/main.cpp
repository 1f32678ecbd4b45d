#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "bandtint/bandtint.h"
#include "cli_args.hpp"

namespace {

struct ImageDeleter {
  void operator()(bt_image* p) const { bt_image_free(p); }
};
struct SystemDeleter {
  void operator()(bt_system* p) const { bt_system_free(p); }
};
using ImagePtr = std::unique_ptr<bt_image, ImageDeleter>;
using SystemPtr = std::unique_ptr<bt_system, SystemDeleter>;

int fail(bt_status status) {
  std::cerr << "bandtint: " << bt_status_string(status) << ": " << bt_last_error() << "\n";
  return 1;
}

int run_colorize_or_correct(const bandtint::cli::Command& cmd) {
  const auto& o = cmd.options;
  bt_system* sys_raw = nullptr;
  if (auto s = bt_system_open(o["from"].get<std::string>().c_str(), &sys_raw); s != BT_OK)
    return fail(s);
  SystemPtr sys(sys_raw);

  bt_image* in_raw = nullptr;
  if (auto s = bt_image_load(o["in"].get<std::string>().c_str(), &in_raw); s != BT_OK)
    return fail(s);
  ImagePtr in(in_raw);

  bt_image* out_raw = nullptr;
  bt_status s;
  if (cmd.name == "colorize") {
    s = bt_system_colorize(sys.get(), in.get(), &out_raw);
  } else {
    const auto means_path = o["means"].get<std::string>();
    std::ifstream f(means_path);
    if (!f) {
      std::cerr << "bandtint: i/o error: cannot open " << means_path << "\n";
      return 1;
    }
    std::stringstream text;
    text << f.rdbuf();
    s = bt_system_correct(sys.get(), in.get(), text.str().c_str(), &out_raw);
  }
  if (s != BT_OK) return fail(s);
  ImagePtr out(out_raw);

  if (bt_image_band_domain(out.get())) {
    bt_image* shown = nullptr;
    if (auto m = bt_image_display_map(out.get(), &shown); m != BT_OK) return fail(m);
    out.reset(shown);
  }
  const auto out_path = o["out"].get<std::string>();
  if (auto w = bt_image_save(out.get(), out_path.c_str()); w != BT_OK) return fail(w);
  std::cout << "wrote " << out_path << " (" << bt_system_kind(sys.get()) << ")\n";
  return 0;
}

int run_job(const bandtint::cli::Command& cmd) {
  char* text = nullptr;
  const auto options = cmd.options.dump();
  if (auto s = bt_run_job(cmd.name.c_str(), options.c_str(), &text, nullptr); s != BT_OK)
    return fail(s);
  std::cout << text;
  bt_string_free(text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const auto parsed = bandtint::cli::parse_args(argc, argv);
  if (!parsed.command) {
    (parsed.is_error ? std::cerr : std::cout) << parsed.message;
    return parsed.exit_code;
  }
  const auto& cmd = *parsed.command;
  if (cmd.name == "colorize" || cmd.name == "correct") return run_colorize_or_correct(cmd);
  return run_job(cmd);
}
