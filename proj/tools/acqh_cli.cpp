// acqh: train, query and evaluate asymmetric correlation quantization models.
//
//   acqh synth --out data/ --seed 1
//   acqh train --data data/ --model model.acqh
//   acqh query --model model.acqh --queries data/Xq.acqd --modality image -k 10
//   acqh eval  --model model.acqh --data data/ --out-dir report/
//   acqh info  --model model.acqh

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "acqh/eval.hpp"
#include "acqh/io.hpp"
#include "acqh/query.hpp"
#include "acqh/synth.hpp"
#include "acqh/trainer.hpp"

namespace fs = std::filesystem;
using namespace acqh;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, text);
}

int run_synth(const SynthConfig& cfg, const fs::path& out, const std::string& format) {
  const DatasetBundle bundle = synth_dataset(cfg);
  save_dataset(bundle, out, parse_format(format));
  std::cout << "wrote " << bundle.x.size() << " items";
  if (bundle.queries) std::cout << " + " << bundle.queries->x.size() << " queries";
  std::cout << " to " << out.string() << "\n";
  return 0;
}

int run_train(const fs::path& data, const std::string& format, const fs::path& model_path,
              fs::path trace_path, const Hyperparams& hyper, bool center, int threads, bool quiet) {
  const DatasetBundle bundle = load_dataset(data, parse_format(format));
  TrainOptions options;
  options.center = center;
  options.threads = threads;
  const TrainResult result = train(bundle.x, bundle.y, bundle.labels, hyper, options);

  write_model_file(model_path, result.model);
  if (trace_path.empty()) {
    trace_path = model_path;
    trace_path += ".trace.csv";
  }
  std::ostringstream trace;
  write_trace_csv(trace, result.trace);
  write_text(trace_path, trace.str());

  if (!quiet) {
    const TraceRecord& last = result.trace.back();
    std::cout << "iterations " << last.iteration << (result.converged ? " (converged)" : "")
              << "\nobjective " << last.terms.total() << "\nmodel " << model_path.string()
              << "\ntrace " << trace_path.string() << "\n";
  }
  return 0;
}

int run_query(const fs::path& model_path, const fs::path& queries, const std::string& format,
              const std::string& modality_name, Index k, const fs::path& out_path) {
  const AcqhModel model = read_model_file(model_path);
  const Modality modality = modality_name == "image" ? Modality::kImage : Modality::kText;
  const FeatureMatrix q(read_features(queries, parse_format(format)), modality);
  const QueryEngine engine(model);

  std::ostringstream out;
  for (Index i = 0; i < q.size(); ++i) {
    write_results_csv(out, i, engine.search(q.data().col(i), modality, k), i == 0);
  }
  if (out_path.empty()) {
    std::cout << out.str();
  } else {
    write_text(out_path, out.str());
  }
  return 0;
}

int run_eval(const fs::path& model_path, const fs::path& data, const std::string& format,
             const fs::path& out_dir, Index points, const std::string& which) {
  const AcqhModel model = read_model_file(model_path);
  const DatasetBundle bundle = load_dataset(data, parse_format(format));
  if (!bundle.queries) throw FileError("dataset " + data.string() + " has no query split (Xq/Yq/Lq)");

  std::ostringstream map_csv;
  map_csv << "direction,map\n";
  for (const Direction dir : {Direction::kImageToText, Direction::kTextToImage}) {
    if (which != "both" && which != (dir == Direction::kImageToText ? "i2t" : "t2i")) continue;
    const FeatureMatrix& q =
        dir == Direction::kImageToText ? bundle.queries->x : bundle.queries->y;
    const RetrievalReport report =
        evaluate_retrieval(q, bundle.queries->labels, model, bundle.labels, dir, points);
    std::cout << "MAP " << to_string(dir) << " " << report.map << "\n";
    map_csv << to_string(dir) << ',' << report.map << '\n';
    if (!out_dir.empty()) {
      std::ostringstream topn, pr;
      write_topn_csv(topn, report.topn);
      write_pr_csv(pr, report.pr);
      write_text(out_dir / (std::string("topn_") + to_string(dir) + ".csv"), topn.str());
      write_text(out_dir / (std::string("pr_") + to_string(dir) + ".csv"), pr.str());
    }
  }
  if (!out_dir.empty()) write_text(out_dir / "map.csv", map_csv.str());
  return 0;
}

int run_info(const fs::path& model_path) {
  const AcqhModel model = read_model_file(model_path);
  const ModelFileLayout layout = model_file_layout(model);
  const auto& d = model.dims;
  const auto& h = model.hyper;
  std::cout << "d_x " << d.dx << "\nd_y " << d.dy << "\nclasses " << d.classes << "\nitems "
            << d.items << "\nK " << h.bits << "\nm " << h.codebooks << "\nn " << h.atoms
            << "\nlambda " << h.lambda << "\nmu " << h.mu
            << "\ncentered " << (model.centering.enabled() ? "yes" : "no")
            << "\nbits_per_item " << layout.bits_per_item
            << "\ncodes_bytes " << layout.codes_bytes
            << "\nreal_bytes " << layout.real_bytes
            << "\nfile_bytes " << layout.total_bytes << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asymmetric correlation quantization hashing for cross-modal retrieval"};
  app.require_subcommand(1);

  // synth
  SynthConfig synth_cfg;
  synth_cfg.dx = 64;
  synth_cfg.dy = 48;
  fs::path synth_out;
  std::string synth_format = "bin";
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic clustered dataset");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--format", synth_format, "bin or csv")->capture_default_str();
  synth->add_option("--classes", synth_cfg.classes)->capture_default_str();
  synth->add_option("--per-class", synth_cfg.per_class)->capture_default_str();
  synth->add_option("--queries-per-class", synth_cfg.queries_per_class)->capture_default_str();
  synth->add_option("--dx", synth_cfg.dx)->capture_default_str();
  synth->add_option("--dy", synth_cfg.dy)->capture_default_str();
  synth->add_option("--noise", synth_cfg.noise_sigma)->capture_default_str();
  synth->add_option("--seed", synth_cfg.seed)->capture_default_str();

  // train
  Hyperparams hyper;
  fs::path train_data, train_model, train_trace;
  std::string train_format = "bin";
  bool center = false, quiet = false;
  int threads = 1;
  auto* tr = app.add_subcommand("train", "Train a model on a dataset directory");
  tr->add_option("--data", train_data, "Dataset directory (X, Y, L)")->required();
  tr->add_option("--format", train_format, "bin or csv")->capture_default_str();
  tr->add_option("--model", train_model, "Output model file")->required();
  tr->add_option("--trace", train_trace, "Objective trace CSV (default <model>.trace.csv)");
  tr->add_option("--bits", hyper.bits, "Latent dimension K")->capture_default_str();
  tr->add_option("--codebooks", hyper.codebooks, "Sub-codebooks m")->capture_default_str();
  tr->add_option("--atoms", hyper.atoms, "Atoms per sub-codebook n")->capture_default_str();
  tr->add_option("--lambda", hyper.lambda)->capture_default_str();
  tr->add_option("--mu", hyper.mu)->capture_default_str();
  tr->add_option("--iters", hyper.max_iters)->capture_default_str();
  tr->add_option("--tol", hyper.tol)->capture_default_str();
  tr->add_option("--ridge-eps", hyper.ridge_eps)->capture_default_str();
  tr->add_option("--seed", hyper.seed)->capture_default_str();
  tr->add_option("--threads", threads, "Encoder threads")->capture_default_str();
  tr->add_flag("--center", center, "Mean-center features before training");
  tr->add_flag("--quiet", quiet);

  // query
  fs::path query_model, query_file, query_out;
  std::string query_format = "bin", modality = "image";
  Index k = 10;
  auto* qy = app.add_subcommand("query", "Rank the database for each query column");
  qy->add_option("--model", query_model)->required();
  qy->add_option("--queries", query_file, "Feature matrix, d x Q")->required();
  qy->add_option("--format", query_format, "bin or csv")->capture_default_str();
  qy->add_option("--modality", modality)->check(CLI::IsMember({"image", "text"}))->capture_default_str();
  qy->add_option("-k,--top", k)->capture_default_str();
  qy->add_option("--out", query_out, "Results CSV (default stdout)");

  // eval
  fs::path eval_model, eval_data, eval_out;
  std::string eval_format = "bin", direction = "both";
  Index points = 20;
  auto* ev = app.add_subcommand("eval", "MAP and curves on the dataset's query split");
  ev->add_option("--model", eval_model)->required();
  ev->add_option("--data", eval_data)->required();
  ev->add_option("--format", eval_format, "bin or csv")->capture_default_str();
  ev->add_option("--out-dir", eval_out, "Directory for map.csv and curve CSVs");
  ev->add_option("--points", points, "topN-precision grid size")->capture_default_str();
  ev->add_option("--direction", direction)->check(CLI::IsMember({"both", "i2t", "t2i"}))->capture_default_str();

  // info
  fs::path info_model;
  auto* info = app.add_subcommand("info", "Print model dimensions and storage");
  info->add_option("--model", info_model)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return run_synth(synth_cfg, synth_out, synth_format);
    if (tr->parsed()) {
      return run_train(train_data, train_format, train_model, train_trace, hyper, center, threads, quiet);
    }
    if (qy->parsed()) return run_query(query_model, query_file, query_format, modality, k, query_out);
    if (ev->parsed()) return run_eval(eval_model, eval_data, eval_format, eval_out, points, direction);
    if (info->parsed()) return run_info(info_model);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
