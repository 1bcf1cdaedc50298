#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <regex>
#include <sstream>

#include "nelloc/codec.hpp"
#include "nelloc/error.hpp"
#include "nelloc/image.hpp"
#include "nelloc/likelihood.hpp"
#include "nelloc/model.hpp"
#include "nelloc/ood.hpp"

namespace nelloc::cli {
namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::pair<std::size_t, std::size_t> parse_pair(const std::string& text, const char* what) {
  static const std::regex kPair(R"((\d+)x(\d+))");
  std::smatch m;
  if (!std::regex_match(text, m, kPair)) throw UsageError(std::string(what) + " must look like AxB, got '" + text + "'");
  const auto a = std::stoull(m[1]), b = std::stoull(m[2]);
  if (a == 0 || b == 0) throw UsageError(std::string(what) + " entries must be positive");
  return {static_cast<std::size_t>(a), static_cast<std::size_t>(b)};
}

WeightBundle load_model(const std::string& path) { return load_weights(read_file(path)); }

std::size_t decode_threads() {
  const char* env = std::getenv("NELLOC_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const unsigned long long n = std::strtoull(env, &end, 10);
  if (*end != '\0' || n > 1024) throw UsageError(std::string("NELLOC_THREADS must be 0..1024, got '") + env + "'");
  return static_cast<std::size_t>(n);
}

std::string fixed4(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

std::vector<double> read_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::vector<double> scores;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object() || !record.contains("score") || !record["score"].is_number()) {
      throw Error(ErrorCode::CorruptHeader, path + ":" + std::to_string(lineno) + ": expected a record with a numeric score");
    }
    scores.push_back(record["score"].get<double>());
  }
  return scores;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io:
      return kIo;
    case ErrorCode::InvalidArgument:
      return kUsage;
    default:
      return kFormat;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lossless image compression and OOD scoring with local autoregressive models"};
  app.name(args.empty() ? "nelloc" : args[0]);
  app.require_subcommand(1);

  std::string model_path, in_path, out_path, coder = "ac", patches = "1x1", size, full_path, local_path, id_path, ood_path;
  std::vector<std::string> files;
  std::uint64_t seed = 0;

  auto* compress_cmd = app.add_subcommand("compress", "Compress a PNM image into a container");
  compress_cmd->add_option("--model", model_path, "Local model weights")->required();
  compress_cmd->add_option("--coder", coder, "Entropy coder")->check(CLI::IsMember({"ac", "rans", "ians"}));
  compress_cmd->add_option("--patches", patches, "Patch grid as RxC");
  compress_cmd->add_option("IN", in_path)->required();
  compress_cmd->add_option("OUT", out_path)->required();

  auto* decompress_cmd = app.add_subcommand("decompress", "Decode a container back to PNM");
  decompress_cmd->add_option("--model", model_path, "Local model weights")->required();
  decompress_cmd->add_option("IN", in_path)->required();
  decompress_cmd->add_option("OUT", out_path)->required();

  auto* bpd_cmd = app.add_subcommand("bpd", "Bits per dimension of PNM images");
  bpd_cmd->add_option("--model", model_path, "Model weights")->required();
  bpd_cmd->add_option("FILES", files)->required();

  auto* sample_cmd = app.add_subcommand("sample", "Draw an image from a model");
  sample_cmd->add_option("--model", model_path, "Model weights")->required();
  sample_cmd->add_option("--size", size, "Image size as HxW")->required();
  sample_cmd->add_option("--seed", seed, "Random seed");
  sample_cmd->add_option("OUT", out_path)->required();

  auto* score_cmd = app.add_subcommand("ood-score", "Likelihood-ratio scores as JSON lines");
  score_cmd->add_option("--full", full_path, "Full model weights")->required();
  score_cmd->add_option("--local", local_path, "Local model weights")->required();
  score_cmd->add_option("FILES", files)->required();

  auto* auroc_cmd = app.add_subcommand("auroc", "AUROC of in-distribution over out-of-distribution scores");
  auroc_cmd->add_option("--id", id_path, "Scores of in-distribution images")->required();
  auroc_cmd->add_option("--ood", ood_path, "Scores of out-of-distribution images")->required();

  auto* inspect_cmd = app.add_subcommand("inspect", "Print container header fields");
  inspect_cmd->add_option("CONTAINER", in_path)->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*compress_cmd) {
      const WeightBundle model = load_model(model_path);
      const auto [rows, cols] = parse_pair(patches, "--patches");
      if (rows > 255 || cols > 255) throw UsageError("--patches allows at most 255 rows and columns");
      const CoderKind kind = coder == "ac" ? CoderKind::Arithmetic : coder == "rans" ? CoderKind::Rans : CoderKind::InterleavedRans;
      const CodeContainer c = compress(read_pnm(in_path), model, kind,
                                       {static_cast<std::uint8_t>(rows), static_cast<std::uint8_t>(cols)});
      write_file(out_path, serialize(c));
      out << out_path << ": " << c.size() << " bytes, " << fixed4(c.bpd()) << " bpd\n";
    } else if (*decompress_cmd) {
      const WeightBundle model = load_model(model_path);
      DecodeOptions options;
      options.threads = decode_threads();
      write_pnm(out_path, decompress(parse_container(read_file(in_path)), model, options));
    } else if (*bpd_cmd) {
      const WeightBundle model = load_model(model_path);
      double total = 0.0;
      for (const auto& f : files) {
        const double v = bpd(read_pnm(f), model);
        total += v;
        out << f << '\t' << fixed4(v) << '\n';
      }
      out << "mean\t" << fixed4(total / static_cast<double>(files.size())) << '\n';
    } else if (*sample_cmd) {
      const WeightBundle model = load_model(model_path);
      const auto [h, w] = parse_pair(size, "--size");
      write_pnm(out_path, sample(model, h, w, seed));
    } else if (*score_cmd) {
      const WeightBundle full = load_model(full_path);
      const WeightBundle local = load_model(local_path);
      for (const auto& f : files) {
        const OodScore s = score(read_pnm(f), full, local);
        out << json{{"file", f}, {"log2_full", s.log2_full}, {"log2_local", s.log2_local}, {"score", s.score}}.dump()
            << '\n';
      }
    } else if (*auroc_cmd) {
      const auto id = read_scores(id_path);
      const auto ood = read_scores(ood_path);
      out << json{{"auroc", auroc(id, ood)}, {"id", id.size()}, {"ood", ood.size()}}.dump() << '\n';
    } else if (*inspect_cmd) {
      const CodeContainer c = parse_container(read_file(in_path));
      std::ostringstream fp;
      fp << std::hex << std::setw(16) << std::setfill('0') << c.fingerprint;
      out << json{{"version", kContainerVersion},
                  {"coder", coder_name(c.coder)},
                  {"fingerprint", fp.str()},
                  {"height", c.height},
                  {"width", c.width},
                  {"channels", c.channels},
                  {"grid", {c.grid.rows, c.grid.cols}},
                  {"payload_lengths", c.payload_lengths},
                  {"header_bytes", c.header_size()},
                  {"total_bytes", c.size()},
                  {"bpd", c.bpd()}}
                 .dump()
          << '\n';
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFormat;
  }
  return kOk;
}

}  // namespace nelloc::cli
