// tools/sfl_cli.cc
//
// Command-line harness: parameter counts, gradient checks, attention-band
// masking sweeps, mean attention maps, RTF benchmarks and a streaming
// decode demo. Results go to stdout and, with --out, to CSV files.
//
// Exit status: 0 success, 1 a check failed, 2 usage or configuration error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sfl/encoder/checkpoint.h"
#include "sfl/harness/analysis.h"
#include "sfl/harness/bench.h"
#include "sfl/harness/gradcheck.h"
#include "sfl/harness/params_table.h"
#include "sfl/transducer/decode.h"
#include "sfl/transducer/loss.h"

namespace {

using namespace sfl;

constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

struct SharedOptions {
  std::string config_path;
  std::string variant;  // empty: keep the config's
  std::size_t chunk_ms = 1280;
  std::uint64_t seed = 0;
  std::string mode = "masked-batch";
  std::size_t repeat = 1;
  std::string out;
  std::string weights;       // checkpoint to load
  std::string save_weights;  // checkpoint to write after init/load
  std::vector<double> durations = {15, 30, 60, 120};
};

void AddConfigFlags(CLI::App *cmd, SharedOptions &o, bool with_variant) {
  cmd->add_option("--config", o.config_path, "encoder config JSON (default: full size)")
      ->check(CLI::ExistingFile);
  if (with_variant) {
    cmd->add_option("--variant", o.variant, "override the config variant")
        ->check(CLI::IsMember({"baseline", "soft", "hard"}));
  }
  cmd->add_option("--seed", o.seed, "seed for weights and features");
  cmd->add_option("--out", o.out, "output directory for CSV files");
}

void AddStreamFlags(CLI::App *cmd, SharedOptions &o) {
  cmd->add_option("--chunk-ms", o.chunk_ms, "chunk size in ms")
      ->check(CLI::IsMember({160, 320, 640, 1280}))
      ->capture_default_str();
  cmd->add_option("--durations", o.durations, "utterance durations in seconds")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--weights", o.weights, "load weights from an SFL1 checkpoint")
      ->check(CLI::ExistingFile);
  cmd->add_option("--save-weights", o.save_weights,
                  "write the weights in use to an SFL1 checkpoint");
}

EncoderConfig ResolveConfig(const SharedOptions &o) {
  EncoderConfig c = o.config_path.empty() ? EncoderConfig::FullSize()
                                          : LoadConfig(o.config_path);
  if (!o.variant.empty()) c.variant = ParseVariant(o.variant);
  c.Validate();
  return c;
}

EncoderModel<float> ResolveModel(const SharedOptions &o) {
  auto model = EncoderModel<float>::Init(ResolveConfig(o), o.seed);
  if (!o.weights.empty()) LoadCheckpoint(model, o.weights);
  if (!o.save_weights.empty()) SaveCheckpoint(model, o.save_weights);
  return model;
}

BenchPlan ResolvePlan(const SharedOptions &o, const EncoderConfig &c) {
  BenchPlan plan;
  plan.seed = o.seed;
  plan.durations_s = o.durations;
  plan.feature_dim = c.feature_dim;
  plan.frame_hop_ms = c.frame_hop_ms;
  plan.repeat_factor = o.repeat;
  return plan;
}

void Emit(const SharedOptions &o, const std::string &name, const CsvTable &t) {
  std::cout << ToCsv(t);
  if (!o.out.empty()) {
    const auto path = std::filesystem::path(o.out) / name;
    WriteCsv(path, t);
    std::cerr << "wrote " << path.string() << "\n";
  }
}

int RunParams(const SharedOptions &o, bool include_transducer,
              const TransducerDims &dims, bool search_width) {
  const EncoderConfig c = ResolveConfig(o);
  const auto counts = variant_counts(c, include_transducer, dims);
  Emit(o, "params_totals.csv", ParamsTotalsTable(counts));
  Emit(o, "params_deltas.csv", ParamsDeltaTable(counts));
  for (const auto &v : counts) {
    std::cerr << VariantName(v.variant) << ": " << HumanCount(v.total) << "\n";
  }
  if (search_width) {
    CsvTable t;
    t.header = {"variant", "d_model", "achieved", "target"};
    for (Variant v : {Variant::kSoft, Variant::kHard}) {
      EncoderConfig vc = c;
      vc.variant = v;
      const auto r = ablation_width_search(counts[0].total, vc,
                                           include_transducer, dims);
      t.rows.push_back({std::string(VariantName(v)), std::to_string(r.config.d_model),
                        std::to_string(r.achieved), std::to_string(counts[0].total)});
    }
    Emit(o, "params_width_search.csv", t);
  }
  return 0;
}

int RunGradcheck(const SharedOptions &o, const std::string &scope,
                 std::size_t seeds) {
  GradcheckOptions options;
  options.seed = o.seed;
  options.seeds = seeds;
  const auto report = gradcheck(ParseGradScope(scope), options);
  Emit(o, "gradcheck.csv", GradcheckTable(report));
  std::cerr << (report.passed() ? "all gradients match" : "GRADIENT CHECK FAILED")
            << "\n";
  return report.passed() ? 0 : kExitCheckFailed;
}

int RunMaskSweep(const SharedOptions &o, const std::vector<std::size_t> &diags) {
  const auto model = ResolveModel(o);
  const auto chunk = ChunkSpec::FromMs(o.chunk_ms, model.config);
  const auto utts = gen_utterances(ResolvePlan(o, model.config));
  Emit(o, "mask_sweep.csv", MaskSweepTable(mask_sweep(model, chunk, utts, diags)));
  return 0;
}

int RunAttnDump(const SharedOptions &o) {
  const auto model = ResolveModel(o);
  const auto chunk = ChunkSpec::FromMs(o.chunk_ms, model.config);
  const auto utts = gen_utterances(ResolvePlan(o, model.config));
  const auto stats = dump_attention(model, chunk, utts, ParseMode(o.mode));
  const std::filesystem::path dir = o.out.empty() ? "attention" : o.out;
  for (const auto &f : stats.write_csv(dir)) std::cout << f.string() << "\n";
  return 0;
}

int RunBench(const SharedOptions &o, std::size_t warmup, std::size_t timed) {
  const auto model = ResolveModel(o);
  const auto chunk = ChunkSpec::FromMs(o.chunk_ms, model.config);
  BenchPlan plan = ResolvePlan(o, model.config);
  plan.warmup_runs = warmup;
  plan.timed_runs = timed;
  const auto records = bench_rtf(plan, model, chunk, ParseMode(o.mode));
  Emit(o, "rtf_" + std::string(VariantName(model.config.variant)) + "_" + o.mode +
              ".csv",
       RtfTable(records));
  if (records.size() >= 2) {
    std::vector<double> x, y;
    for (const auto &r : records) {
      x.push_back(r.audio_duration_s);
      y.push_back(r.encoder_wall_time_s);
    }
    std::cerr << "log-log slope " << FormatReal(loglog_slope(x, y)) << "\n";
  }
  return 0;
}

int RunDecodeDemo(const SharedOptions &o, std::size_t vocab) {
  const auto model = ResolveModel(o);
  const auto chunk = ChunkSpec::FromMs(o.chunk_ms, model.config);
  BenchPlan plan = ResolvePlan(o, model.config);
  plan.durations_s = {o.durations.empty() ? 2.56 : o.durations.front()};
  const auto utt = gen_utterances(plan).front();
  const auto input = pad_to_chunk(utt.features, chunk);

  Rng rng(o.seed + 1);
  const auto tail = TransducerTail<float>::Random(
      rng, model.config.d_model, {vocab, model.config.d_model});
  // Chunks arrive one at a time; acoustic state is dropped between them,
  // predictor state is kept.
  GreedyDecoder<float> decoder(tail);
  std::vector<Tensor<float>> encoded;
  CsvTable t;
  t.header = {"chunk", "frames", "labels"};
  for (std::size_t s = 0; s < input.dim(0); s += chunk.raw_frames) {
    const auto piece = input.slice_rows(s, s + chunk.raw_frames);
    encoded.push_back(encode_incremental(piece, model, chunk).outputs);
    std::string labels;
    for (Label l : decoder.accept(encoded.back()))
      labels += (labels.empty() ? "" : " ") + std::to_string(l);
    t.rows.push_back({std::to_string(encoded.size() - 1),
                      std::to_string(encoded.back().dim(0)), labels});
  }
  Emit(o, "decode_demo.csv", t);

  const Tensor<float> whole = ConcatRows<float>(encoded);
  const auto batch = greedy_decode(std::span<const Tensor<float>>(&whole, 1), tail);
  const bool same = batch == decoder.hypothesis();
  std::cerr << decoder.hypothesis().size() << " labels; streaming "
            << (same ? "matches" : "DIFFERS FROM") << " whole-sequence decoding\n";
  const auto loss = rnnt_loss(whole, std::span<const Label>(decoder.hypothesis()), tail);
  std::cerr << "transducer loss of the hypothesis " << FormatReal(loss.loss) << "\n";
  return same ? 0 : kExitCheckFailed;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Streaming Conformer encoder variants: counts, checks and benchmarks"};
  app.require_subcommand(1);
  SharedOptions o;

  auto *params = app.add_subcommand("params", "parameter totals and pairwise deltas");
  bool include_transducer = false, search_width = false;
  TransducerDims dims;
  AddConfigFlags(params, o, false);
  params->add_flag("--include-transducer", include_transducer,
                   "add predictor and joint network");
  params->add_option("--vocab", dims.vocab, "labels excluding blank")->capture_default_str();
  params->add_option("--predictor-dim", dims.predictor_dim)->capture_default_str();
  params->add_flag("--search-width", search_width,
                   "widen soft and hard until they match the baseline count");
  params->footer(
      "CSV params_totals: variant,total,subsampling,feed_forward,middle,"
      "convolution,final_norms,transducer\n"
      "CSV params_deltas: a,b,delta,delta_pct_of_b\n"
      "CSV params_width_search: variant,d_model,achieved,target");

  auto *grad = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  std::string scope = "all";
  std::size_t grad_seeds = 100;
  grad->add_option("--scope", scope)
      ->check(CLI::IsMember({"attention", "deform", "rnnt", "ctc", "all"}))
      ->capture_default_str();
  grad->add_option("--seeds", grad_seeds, "random problems per operation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  grad->add_option("--seed", o.seed);
  grad->add_option("--out", o.out);
  grad->footer("CSV gradcheck: operation,seeds,max_rel_error,passed");

  auto *sweep = app.add_subcommand("mask-sweep", "band-mask retained fraction and divergence");
  std::vector<std::size_t> diags = {7, 5};
  AddConfigFlags(sweep, o, true);
  AddStreamFlags(sweep, o);
  sweep->add_option("--n-diag", diags, "odd diagonal counts")->delimiter(',')
      ->capture_default_str();
  sweep->footer("CSV mask_sweep: utterance_id,n_diag,retained_fraction,divergence");

  auto *attn = app.add_subcommand("attn-dump", "mean attention map per layer");
  AddConfigFlags(attn, o, true);
  AddStreamFlags(attn, o);
  attn->add_option("--mode", o.mode)
      ->check(CLI::IsMember({"masked-batch", "incremental"}))
      ->capture_default_str();
  attn->footer("CSV layer_NN: one T x T matrix per layer, no header");

  auto *bench = app.add_subcommand("bench-rtf", "encoder-only real-time factor");
  std::size_t warmup = 1, timed = 3;
  AddConfigFlags(bench, o, true);
  AddStreamFlags(bench, o);
  bench->add_option("--mode", o.mode)
      ->check(CLI::IsMember({"masked-batch", "incremental"}))
      ->capture_default_str();
  bench->add_option("--repeat", o.repeat)->check(CLI::IsMember({1, 3}))->capture_default_str();
  bench->add_option("--warmup", warmup)->capture_default_str();
  bench->add_option("--timed", timed)->capture_default_str();
  bench->footer(
      "CSV rtf_<variant>_<mode>: utterance_id,audio_duration_s,"
      "encoder_wall_time_s,rtf,variant,mode,chunk_ms,repeat_factor");

  auto *demo = app.add_subcommand("decode-demo", "chunked encode plus greedy decoding");
  std::size_t vocab = 64;
  AddConfigFlags(demo, o, true);
  AddStreamFlags(demo, o);
  demo->add_option("--vocab", vocab)->capture_default_str();
  demo->footer("CSV decode_demo: chunk,frames,labels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*params) return RunParams(o, include_transducer, dims, search_width);
    if (*grad) return RunGradcheck(o, scope, grad_seeds);
    if (*sweep) return RunMaskSweep(o, diags);
    if (*attn) return RunAttnDump(o);
    if (*bench) return RunBench(o, warmup, timed);
    if (*demo) return RunDecodeDemo(o, vocab);
  } catch (const ConfigError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UnsupportedVariantError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return kExitUsage;
}
