// Copyright 2026 The Convex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// convex: terminal chat, HTTP server and corpus evaluation.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "convex/common/files.hpp"
#include "convex/metrics/metrics.hpp"
#include "convex/service/service.hpp"
#include "convex/storyteller/story.hpp"

using namespace convex;
using nlohmann::json;

namespace {

constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

std::string default_store() {
  const char* env = std::getenv("CONVEX_STORE");
  return env && *env ? env : "convex-store";
}

const char* kReplHelp =
    "Type a request in plain language, or one of:\n"
    "  /upload PATH   send a data file\n"
    "  /pause         save the session and print its id\n"
    "  /resume ID     continue a paused session\n"
    "  /story         end the session and print the story\n"
    "  /quit          leave (the session stays open)\n"
    "  /help          this text\n";

class Repl {
 public:
  Repl(service::Api& api, uint64_t seed, std::optional<char> delimiter, bool echo)
      : api_(api), seed_(seed), delimiter_(delimiter), echo_(echo) {}

  // Returns false on /quit.
  bool handle(const std::string& line) {
    if (echo_) std::cout << "you> " << line << "\n";
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) return true;
    try {
      if (line[first] != '/') {
        print_turns(api_.message(session(), {{"text", line}}));
        return true;
      }
      std::istringstream in(line.substr(first));
      std::string cmd, arg;
      in >> cmd;
      std::getline(in >> std::ws, arg);
      if (cmd == "/quit" || cmd == "/exit") return false;
      if (cmd == "/upload" && !arg.empty()) {
        upload(arg);
      } else if (cmd == "/pause") {
        auto r = api_.pause(session());
        std::cout << "Paused. Snapshot id: " << r["session_id"].get<std::string>()
                  << "\nResume later with /resume " << r["session_id"].get<std::string>() << "\n";
      } else if (cmd == "/resume" && !arg.empty()) {
        api_.resume(arg);
        id_ = arg;
        std::cout << "Resumed session " << arg << ".\n";
        auto t = api_.get_session(arg);
        for (auto it = t["turns"].rbegin(); it != t["turns"].rend(); ++it) {
          if ((*it)["speaker"] == "bot") {
            std::cout << "bot> " << (*it)["text"].get<std::string>() << "\n";
            break;
          }
        }
      } else if (cmd == "/story") {
        auto story = api_.story(session());
        std::cout << story["markdown"].get<std::string>() << "\n";
        const auto s = api_.store().load(*id_);
        std::cout << "Story saved to "
                  << api_.store().artifact_path(s.id, s.require_artifact(story["artifact_id"].get<std::string>())).string()
                  << "\n";
      } else {
        std::cout << kReplHelp;
      }
    } catch (const std::exception& e) {
      std::cout << "error: " << e.what() << "\n";
    }
    return true;
  }

  void upload(const std::string& path) {
    service::UploadRequest up;
    up.filename = std::filesystem::path(path).filename().string();
    up.bytes = read_file(path);
    up.delimiter = delimiter_;
    print_turns(api_.upload(session(), up));
  }

 private:
  const std::string& session() {
    if (!id_) {
      id_ = api_.create_session({{"seed", seed_}})["session_id"].get<std::string>();
      std::cout << "Session " << *id_ << "\n";
    }
    return *id_;
  }

  void print_turns(const json& reply) {
    const auto s = api_.store().load(*id_);
    for (const auto& t : reply["turns"]) {
      std::cout << "bot> " << t["text"].get<std::string>() << "\n";
      for (const auto& d : t["artifact_details"]) {
        const auto& a = s.require_artifact(d["id"].get<std::string>());
        std::cout << "     [" << a.id << "] " << a.title << " -> "
                  << api_.store().artifact_path(s.id, a).string() << "\n";
        const std::string table = storyteller::artifact_table(a, s.payload(a));
        if (!table.empty()) std::cout << table << "\n";
      }
    }
  }

  service::Api& api_;
  uint64_t seed_;
  std::optional<char> delimiter_;
  bool echo_;
  std::optional<std::string> id_;
};

int run_repl(const std::string& store_dir, const std::string& data, uint64_t seed,
             const std::string& delimiter, const std::string& script) {
  store::SessionStore store(store_dir);
  service::Api api(store);
  std::optional<char> delim;
  if (!delimiter.empty()) delim = delimiter == "\\t" ? '\t' : delimiter[0];

  std::ifstream script_in;
  if (!script.empty()) {
    script_in.open(script);
    if (!script_in) {
      std::cerr << "error: cannot read script " << script << "\n";
      return kUsageError;
    }
  }
  std::istream& in = script.empty() ? std::cin : script_in;
  Repl repl(api, seed, delim, !script.empty());
  if (script.empty()) std::cout << "convex chat. /help lists commands.\n";
  if (!data.empty()) {
    try {
      repl.upload(data);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kRuntimeError;
    }
  }
  std::string line;
  while (true) {
    if (script.empty()) std::cout << "you> " << std::flush;
    if (!std::getline(in, line)) break;
    if (!repl.handle(line)) break;
  }
  return 0;
}

int run_serve(const std::string& store_dir, const std::string& bind, int port) {
  store::SessionStore store(store_dir);
  service::Api api(store);
  service::serve(api, {bind, port}, [&](int bound) {
    std::cout << "listening on http://" << bind << ":" << bound << " (store " << store_dir << ")"
              << std::endl;
  });
  return 0;
}

int run_eval(const std::string& corpus_path, std::optional<uint64_t> seed,
             const std::string& out, unsigned jobs) {
  metrics::Corpus corpus;
  try {
    corpus = metrics::load_corpus(corpus_path);
  } catch (const metrics::CorpusSchemaError& e) {
    std::cerr << "error: " << corpus_path << ": " << e.what() << "\n";
    return kUsageError;
  }
  metrics::RunOptions opts;
  opts.seed = seed;
  opts.jobs = jobs;
  dialogue::Assistant bot;
  auto report = metrics::run_corpus(corpus, bot, opts);
  std::cout << metrics::format_table(report);
  if (!out.empty()) write_file_atomic(out, metrics::to_json(report).dump(2) + "\n");
  for (const auto& c : report.cases) {
    if (c.error) std::cerr << "case " << c.id << ": " << *c.error << "\n";
  }
  return report.errors() == 0 ? 0 : kRuntimeError;
}

int run_gen_corpus(uint64_t seed, size_t cases, const std::string& out) {
  dialogue::Assistant bot;
  auto corpus = metrics::generate_corpus(seed, cases, bot, data_dir() + "/fixtures");
  write_file_atomic(out, metrics::to_json(corpus).dump(2));
  std::cout << "wrote " << corpus.cases.size() << " cases to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chat-driven exploration of tabular data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "convex 0.1.0");

  std::string store_dir = default_store();

  auto* repl = app.add_subcommand("repl", "Chat in the terminal");
  std::string data, delimiter, script;
  uint64_t seed = 42;
  repl->add_option("--data", data, "Data file uploaded at start")->check(CLI::ExistingFile);
  repl->add_option("--store", store_dir, "Session store directory (env CONVEX_STORE)");
  repl->add_option("--seed", seed, "Session seed");
  repl->add_option("--delimiter", delimiter, "CSV field delimiter (\\t for tab)");
  repl->add_option("--script", script, "Read input lines from a file")->check(CLI::ExistingFile);

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string bind = "127.0.0.1";
  int port = 8080;
  serve->add_option("--port", port, "Listening port (0 picks one)")->check(CLI::Range(0, 65535));
  serve->add_option("--bind", bind, "Listening address");
  serve->add_option("--store", store_dir, "Session store directory (env CONVEX_STORE)");

  auto* eval = app.add_subcommand("eval", "Score the assistant on a gold corpus");
  std::string corpus_path = data_dir() + "/corpus.json";
  std::optional<uint64_t> eval_seed;
  std::string out;
  unsigned jobs = 1;
  eval->add_option("--corpus", corpus_path, "Corpus file")->check(CLI::ExistingFile);
  eval->add_option("--seed", eval_seed, "Re-realize utterances with this seed");
  eval->add_option("--out", out, "Write the JSON report here");
  eval->add_option("--jobs", jobs, "Parallel workers")->check(CLI::Range(1u, 256u));

  auto* gen = app.add_subcommand("gen-corpus", "Generate a gold corpus");
  uint64_t gen_seed = 20261016;
  size_t gen_cases = 30;
  std::string gen_out;
  gen->add_option("--seed", gen_seed, "Sampling seed");
  gen->add_option("--cases", gen_cases, "Number of cases")->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*repl) {
      if (delimiter.size() > 1 && delimiter != "\\t") {
        std::cerr << "error: --delimiter takes one character\n";
        return kUsageError;
      }
      return run_repl(store_dir, data, seed, delimiter, script);
    }
    if (*serve) return run_serve(store_dir, bind, port);
    if (*eval) return run_eval(corpus_path, eval_seed, out, jobs);
    if (*gen) return run_gen_corpus(gen_seed, gen_cases, gen_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return 0;
}
