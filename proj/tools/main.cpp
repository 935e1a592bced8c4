// geovmf command line: reproducible workflows over the C API.
//
// Subcommands: ingest, split, train, predict, evaluate, contours, sample,
// gradcheck. Every output-producing run writes a <output>.manifest.json with
// the exact command, resolved configuration, seeds and input digests, so a
// run can be replayed bit-for-bit (network fetches excluded).
//
// Exit codes: 0 success, 1 usage error, 2 data/IO error, 3 numeric failure.

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "geovmf.h"

using nlohmann::json;

namespace {

struct ExitWith {
  int code;
  std::string message;
};

int status_to_exit(geovmf_status s) {
  switch (s) {
    case GEOVMF_OK: return 0;
    case GEOVMF_E_ARG: return 1;
    case GEOVMF_E_DATA: return 2;
    case GEOVMF_E_IO: return 2;
    case GEOVMF_E_NUMERIC: return 3;
  }
  return 2;
}

void check(geovmf_status s) {
  if (s != GEOVMF_OK) throw ExitWith{status_to_exit(s), geovmf_last_error()};
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "unreadable";
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Written alongside every produced output.
struct ManifestWriter {
  std::string command;
  std::vector<std::string> argv;
  json config = json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string started = iso8601_now();
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  void write(const std::string& anchor_output) const {
    json m;
    m["command"] = command;
    m["argv"] = argv;
    m["config"] = config;
    m["seed"] = seed;
    json digests = json::object();
    for (const auto& p : inputs) digests[p] = sha256_file(p);
    m["input_digests"] = digests;
    m["outputs"] = outputs;
    m["artifact_version"] = geovmf_version();
    m["started_utc"] = started;
    m["duration_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream out(anchor_output + ".manifest.json", std::ios::trunc);
    out << m.dump(2) << '\n';
  }
};

std::vector<double> parse_csv_doubles(const std::string& csv, std::size_t expect = 0) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (...) {
      throw ExitWith{1, "cannot parse number '" + item + "' in '" + csv + "'"};
    }
  }
  if (expect != 0 && out.size() != expect) {
    throw ExitWith{1, "expected " + std::to_string(expect) + " comma-separated values, got " +
                          std::to_string(out.size())};
  }
  return out;
}

int parse_point_rule(const std::string& rule) {
  if (rule == "highProb") return 0;
  if (rule == "random") return 1;
  if (rule == "randomWeighted") return 2;
  throw ExitWith{1, "unknown rule '" + rule + "' (highProb, random, randomWeighted)"};
}

// Loads one mixture from a predictions JSONL by record id.
geovmf_mixture* mixture_from_predictions(const std::string& path, const std::string& id) {
  std::ifstream in(path);
  if (!in) throw ExitWith{2, "cannot open prediction file: " + path};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") || j["id"] != id) continue;
    if (!j.contains("components") || !j["components"].is_array() || j["components"].empty()) {
      throw ExitWith{2, "record '" + id + "' has no mixture components"};
    }
    std::vector<double> lat, lon, kappa, rho;
    for (const auto& c : j["components"]) {
      lat.push_back(c.at("lat").get<double>());
      lon.push_back(c.at("lon").get<double>());
      kappa.push_back(c.at("kappa").get<double>());
      rho.push_back(c.at("rho").get<double>());
    }
    geovmf_mixture* m = nullptr;
    check(geovmf_mixture_create(lat.data(), lon.data(), kappa.data(), rho.data(),
                                static_cast<uint32_t>(lat.size()), &m));
    return m;
  }
  throw ExitWith{2, "record id '" + id + "' not found in " + path};
}

struct MixtureHandle {
  geovmf_mixture* m = nullptr;
  ~MixtureHandle() { geovmf_mixture_free(m); }
};

struct ModelHandle {
  geovmf_model* m = nullptr;
  ~ModelHandle() { geovmf_model_free(m); }
};

// Resolves --model/--text vs --pred/--id into a mixture handle.
void resolve_mixture_source(const std::string& model_path, const std::string& text,
                            const std::string& pred_path, const std::string& record_id,
                            ModelHandle& model, MixtureHandle& mix,
                            ManifestWriter& manifest) {
  const bool from_model = !model_path.empty();
  const bool from_pred = !pred_path.empty();
  if (from_model == from_pred) {
    throw ExitWith{1, "pass exactly one of --model/--text or --pred/--id"};
  }
  if (from_model) {
    if (text.empty()) throw ExitWith{1, "--model requires --text"};
    check(geovmf_model_load(model_path.c_str(), &model.m));
    check(geovmf_model_predict(model.m, text.c_str(), &mix.m));
    manifest.inputs.push_back(model_path);
    manifest.config["model"] = model_path;
    manifest.config["text"] = text;
  } else {
    if (record_id.empty()) throw ExitWith{1, "--pred requires --id"};
    mix.m = mixture_from_predictions(pred_path, record_id);
    manifest.inputs.push_back(pred_path);
    manifest.config["pred"] = pred_path;
    manifest.config["id"] = record_id;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"probabilistic geocoding with von Mises-Fisher mixtures"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; flags override");
  app.set_version_flag("--version", std::string(geovmf_version()));

  std::vector<std::string> raw_argv(argv, argv + argc);

  // ---------------------------------------------------------------- ingest
  auto* ingest = app.add_subcommand("ingest", "fetch or validate a geocoded corpus");
  struct {
    std::string endpoint, in, out, cursor;
    std::uint64_t limit = 1000;
    double rate = 2.0;
    bool lenient = false;
  } ing;
  ingest->add_option("--endpoint", ing.endpoint, "article-extract HTTP endpoint");
  ingest->add_option("--in", ing.in, "existing corpus JSONL to validate");
  ingest->add_option("--out", ing.out, "output corpus JSONL")->required();
  ingest->add_option("--cursor", ing.cursor, "continuation-token file for resumable fetches");
  ingest->add_option("--limit", ing.limit, "records to fetch");
  ingest->add_option("--rate", ing.rate, "requests per second");
  ingest->add_flag("--lenient", ing.lenient, "skip malformed lines instead of failing");
  ingest->callback([&] {
    ManifestWriter manifest;
    manifest.command = "ingest";
    manifest.argv = raw_argv;
    if (ing.endpoint.empty() == ing.in.empty()) {
      throw ExitWith{1, "pass exactly one of --endpoint or --in"};
    }
    if (!ing.in.empty()) {
      uint64_t kept = 0, skipped = 0;
      check(geovmf_validate_corpus(ing.in.c_str(), ing.out.c_str(), ing.lenient ? 1 : 0, &kept,
                                   &skipped));
      std::printf("kept %llu records, skipped %llu\n", (unsigned long long)kept,
                  (unsigned long long)skipped);
      manifest.inputs.push_back(ing.in);
      manifest.config = {{"in", ing.in}, {"out", ing.out}, {"lenient", ing.lenient}};
    } else {
      uint64_t fetched = 0, skipped = 0, retries = 0;
      check(geovmf_fetch_articles(ing.endpoint.c_str(), ing.limit, ing.rate,
                                  ing.cursor.empty() ? nullptr : ing.cursor.c_str(),
                                  ing.out.c_str(), &fetched, &skipped, &retries));
      std::printf("fetched %llu records, skipped %llu, retries %llu\n",
                  (unsigned long long)fetched, (unsigned long long)skipped,
                  (unsigned long long)retries);
      manifest.config = {{"endpoint", ing.endpoint}, {"limit", ing.limit}, {"rate", ing.rate},
                         {"cursor", ing.cursor},     {"out", ing.out}};
    }
    manifest.outputs.push_back(ing.out);
    manifest.write(ing.out);
  });

  // ----------------------------------------------------------------- split
  auto* split = app.add_subcommand("split", "shuffle and partition a corpus");
  struct {
    std::string in, fractions = "0.98,0.01,0.01", out_prefix;
    std::uint64_t seed = 42;
  } sp;
  split->add_option("--in", sp.in, "corpus JSONL")->required();
  split->add_option("--fractions", sp.fractions, "train,val,test fractions (sum to 1)");
  split->add_option("--out-prefix", sp.out_prefix, "writes <prefix>.{train,val,test}.jsonl")
      ->required();
  split->add_option("--seed", sp.seed, "shuffle seed");
  split->callback([&] {
    ManifestWriter manifest;
    manifest.command = "split";
    manifest.argv = raw_argv;
    manifest.seed = sp.seed;
    const auto f = parse_csv_doubles(sp.fractions, 3);
    const std::string t = sp.out_prefix + ".train.jsonl";
    const std::string v = sp.out_prefix + ".val.jsonl";
    const std::string e = sp.out_prefix + ".test.jsonl";
    check(geovmf_split_corpus(sp.in.c_str(), f[0], f[1], f[2], sp.seed, t.c_str(), v.c_str(),
                              e.c_str()));
    std::printf("wrote %s, %s, %s\n", t.c_str(), v.c_str(), e.c_str());
    manifest.inputs.push_back(sp.in);
    manifest.config = {{"in", sp.in}, {"fractions", sp.fractions}, {"out_prefix", sp.out_prefix}};
    manifest.outputs = {t, v, e};
    manifest.write(sp.out_prefix);
  });

  // ----------------------------------------------------------------- train
  auto* train = app.add_subcommand("train", "fit the mixture regression head");
  struct {
    std::string train_path, val_path, out, log, loss = "nll";
    geovmf_train_options opts{};
    bool no_shuffle = false, no_lowercase = false;
  } tr;
  geovmf_train_options_init(&tr.opts);
  train->add_option("--train", tr.train_path, "training corpus JSONL")
      ->required()
      ;
  train->add_option("--val", tr.val_path, "validation corpus JSONL");
  train->add_option("--out", tr.out, "checkpoint output path")->required();
  train->add_option("--log", tr.log, "per-epoch history TSV");
  train->add_option("--lr", tr.opts.learning_rate, "Adam learning rate");
  train->add_option("--epochs", tr.opts.epochs, "training epochs");
  train->add_option("--batch", tr.opts.batch_size, "minibatch size");
  train->add_option("--loss", tr.loss, "nll (proper mixture) or weighted (per-component weighted)");
  train->add_option("--seed", tr.opts.seed, "master seed");
  train->add_option("--dim", tr.opts.feature_dim, "feature dimension (power of two)");
  train->add_option("--hidden", tr.opts.hidden_dim, "hidden layer width");
  train->add_option("--components", tr.opts.components, "mixture components K");
  train->add_option("--ngram-min", tr.opts.ngram_min, "smallest character n-gram");
  train->add_option("--ngram-max", tr.opts.ngram_max, "largest character n-gram");
  train->add_option("--hash-seed", tr.opts.hash_seed, "featurizer hash seed");
  train->add_flag("--no-shuffle", tr.no_shuffle, "keep corpus order each epoch");
  train->add_flag("--no-lowercase", tr.no_lowercase, "skip case folding");
  train->callback([&] {
    ManifestWriter manifest;
    manifest.command = "train";
    manifest.argv = raw_argv;
    manifest.seed = tr.opts.seed;
    if (tr.loss == "nll") {
      tr.opts.loss = 0;
    } else if (tr.loss == "weighted") {
      tr.opts.loss = 1;
    } else {
      throw ExitWith{1, "unknown loss '" + tr.loss + "' (nll, weighted)"};
    }
    tr.opts.shuffle = tr.no_shuffle ? 0 : 1;
    tr.opts.lowercase = tr.no_lowercase ? 0 : 1;
    check(geovmf_train_file(tr.train_path.c_str(),
                            tr.val_path.empty() ? nullptr : tr.val_path.c_str(), &tr.opts,
                            tr.out.c_str(), tr.log.empty() ? nullptr : tr.log.c_str()));
    std::printf("wrote checkpoint %s\n", tr.out.c_str());
    manifest.inputs.push_back(tr.train_path);
    if (!tr.val_path.empty()) manifest.inputs.push_back(tr.val_path);
    manifest.config = {{"train", tr.train_path}, {"val", tr.val_path},
                       {"out", tr.out},          {"log", tr.log},
                       {"lr", tr.opts.learning_rate}, {"epochs", tr.opts.epochs},
                       {"batch", tr.opts.batch_size}, {"loss", tr.loss},
                       {"dim", tr.opts.feature_dim},  {"hidden", tr.opts.hidden_dim},
                       {"components", tr.opts.components},
                       {"ngram_min", tr.opts.ngram_min}, {"ngram_max", tr.opts.ngram_max},
                       {"hash_seed", tr.opts.hash_seed}, {"shuffle", tr.opts.shuffle != 0},
                       {"lowercase", tr.opts.lowercase != 0}};
    manifest.outputs.push_back(tr.out);
    if (!tr.log.empty()) manifest.outputs.push_back(tr.log);
    manifest.write(tr.out);
  });

  // --------------------------------------------------------------- predict
  auto* predict = app.add_subcommand("predict", "emit mixture predictions for a corpus");
  struct {
    std::string model, in, out, rule;
    std::uint64_t seed = 42;
  } pr;
  predict->add_option("--model", pr.model, "checkpoint")->required();
  predict->add_option("--in", pr.in, "corpus JSONL")->required();
  predict->add_option("--out", pr.out, "predictions JSONL")->required();
  predict->add_option("--rule", pr.rule,
                      "also emit a point per record: highProb, random, randomWeighted");
  predict->add_option("--seed", pr.seed, "seed for the random rule");
  predict->callback([&] {
    ManifestWriter manifest;
    manifest.command = "predict";
    manifest.argv = raw_argv;
    manifest.seed = pr.seed;
    ModelHandle model;
    check(geovmf_model_load(pr.model.c_str(), &model.m));
    const int rule = pr.rule.empty() ? -1 : parse_point_rule(pr.rule);
    check(geovmf_predict_file(model.m, pr.in.c_str(), pr.out.c_str(), rule, pr.seed));
    std::printf("wrote predictions %s\n", pr.out.c_str());
    manifest.inputs = {pr.model, pr.in};
    manifest.config = {{"model", pr.model}, {"in", pr.in}, {"out", pr.out}, {"rule", pr.rule}};
    manifest.outputs.push_back(pr.out);
    manifest.write(pr.out);
  });

  // -------------------------------------------------------------- evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score predictions against gold coordinates");
  struct {
    std::string pred, gold, rule = "highProb", mode = "imputed", label = "model", out;
    std::uint32_t bootstrap = 1000;
    std::uint64_t seed = 42;
  } ev;
  evaluate->add_option("--pred", ev.pred, "predictions JSONL (mixtures or candidate lists)")
      ->required()
      ;
  evaluate->add_option("--gold", ev.gold, "gold corpus JSONL")->required();
  evaluate->add_option("--rule", ev.rule, "highProb, best or random");
  evaluate->add_option("--mode", ev.mode, "imputed or complete_cases");
  evaluate->add_option("--bootstrap", ev.bootstrap, "bootstrap resamples for standard errors");
  evaluate->add_option("--label", ev.label, "model label in the report");
  evaluate->add_option("--out", ev.out, "machine-readable report JSON path");
  evaluate->add_option("--seed", ev.seed, "seed (random rule, bootstrap)");
  evaluate->callback([&] {
    ManifestWriter manifest;
    manifest.command = "evaluate";
    manifest.argv = raw_argv;
    manifest.seed = ev.seed;
    int rule;
    if (ev.rule == "highProb") rule = 0;
    else if (ev.rule == "best") rule = 1;
    else if (ev.rule == "random") rule = 2;
    else throw ExitWith{1, "unknown rule '" + ev.rule + "' (highProb, best, random)"};
    int mode;
    if (ev.mode == "imputed") mode = 0;
    else if (ev.mode == "complete_cases") mode = 1;
    else throw ExitWith{1, "unknown mode '" + ev.mode + "' (imputed, complete_cases)"};

    char* report_json = nullptr;
    char* table = nullptr;
    check(geovmf_evaluate_files(ev.pred.c_str(), ev.gold.c_str(), rule, mode, ev.seed,
                                ev.bootstrap, ev.label.c_str(), &report_json, &table));
    std::fputs(table, stdout);
    if (!ev.out.empty()) {
      std::ofstream out(ev.out, std::ios::trunc);
      out << report_json << '\n';
      manifest.inputs = {ev.pred, ev.gold};
      manifest.config = {{"pred", ev.pred},   {"gold", ev.gold},
                         {"rule", ev.rule},   {"mode", ev.mode},
                         {"bootstrap", ev.bootstrap}, {"label", ev.label}, {"out", ev.out}};
      manifest.outputs.push_back(ev.out);
      manifest.write(ev.out);
    }
    geovmf_string_free(report_json);
    geovmf_string_free(table);
  });

  // -------------------------------------------------------------- contours
  auto* contours = app.add_subcommand("contours", "HPD contour GeoJSON for one prediction");
  struct {
    std::string model, text, pred, id, levels = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9", truth, out;
    double res = 1.0, fine_res = 0.05;
  } co;
  contours->add_option("--model", co.model, "checkpoint (with --text)");
  contours->add_option("--text", co.text, "text to geocode");
  contours->add_option("--pred", co.pred, "predictions JSONL (with --id)");
  contours->add_option("--id", co.id, "record id inside --pred");
  contours->add_option("--levels", co.levels, "ascending HPD mass levels");
  contours->add_option("--res", co.res, "coarse whole-sphere resolution, degrees");
  contours->add_option("--fine-res", co.fine_res, "refined resolution, degrees");
  contours->add_option("--truth", co.truth, "gold lat,lon to include as a Point feature");
  contours->add_option("--out", co.out, "output path (stdout when omitted)");
  contours->callback([&] {
    ManifestWriter manifest;
    manifest.command = "contours";
    manifest.argv = raw_argv;
    ModelHandle model;
    MixtureHandle mix;
    resolve_mixture_source(co.model, co.text, co.pred, co.id, model, mix, manifest);
    const auto levels = parse_csv_doubles(co.levels);
    double truth_lat = 0.0, truth_lon = 0.0;
    int with_truth = 0;
    if (!co.truth.empty()) {
      const auto t = parse_csv_doubles(co.truth, 2);
      truth_lat = t[0];
      truth_lon = t[1];
      with_truth = 1;
    }
    char* geojson = nullptr;
    check(geovmf_mixture_contours(mix.m, levels.data(), static_cast<uint32_t>(levels.size()),
                                  co.res, co.fine_res, with_truth, truth_lat, truth_lon,
                                  &geojson));
    if (co.out.empty()) {
      std::fputs(geojson, stdout);
      std::fputc('\n', stdout);
    } else {
      std::ofstream out(co.out, std::ios::trunc);
      out << geojson << '\n';
      manifest.config["levels"] = co.levels;
      manifest.config["res"] = co.res;
      manifest.config["fine_res"] = co.fine_res;
      manifest.config["truth"] = co.truth;
      manifest.config["out"] = co.out;
      manifest.outputs.push_back(co.out);
      manifest.write(co.out);
    }
    geovmf_string_free(geojson);
  });

  // ---------------------------------------------------------------- sample
  auto* sample = app.add_subcommand("sample", "draw coordinates from one prediction");
  struct {
    std::string model, text, pred, id, out;
    std::uint64_t n = 1000;
    std::uint64_t seed = 42;
  } sa;
  sample->add_option("--model", sa.model, "checkpoint (with --text)");
  sample->add_option("--text", sa.text, "text to geocode");
  sample->add_option("--pred", sa.pred, "predictions JSONL (with --id)");
  sample->add_option("--id", sa.id, "record id inside --pred");
  sample->add_option("-n,--n", sa.n, "number of draws");
  sample->add_option("--seed", sa.seed, "sampling seed");
  sample->add_option("--out", sa.out, "output JSONL (stdout when omitted)");
  sample->callback([&] {
    ManifestWriter manifest;
    manifest.command = "sample";
    manifest.argv = raw_argv;
    manifest.seed = sa.seed;
    ModelHandle model;
    MixtureHandle mix;
    resolve_mixture_source(sa.model, sa.text, sa.pred, sa.id, model, mix, manifest);
    std::vector<double> lats(sa.n), lons(sa.n);
    check(geovmf_mixture_sample(mix.m, sa.n, sa.seed, lats.data(), lons.data()));
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!sa.out.empty()) {
      file.open(sa.out, std::ios::trunc);
      out = &file;
    }
    char buf[96];
    for (std::uint64_t i = 0; i < sa.n; ++i) {
      std::snprintf(buf, sizeof(buf), "{\"lat\": %.17g, \"lon\": %.17g}\n", lats[i], lons[i]);
      *out << buf;
    }
    if (!sa.out.empty()) {
      manifest.config["n"] = sa.n;
      manifest.config["out"] = sa.out;
      manifest.outputs.push_back(sa.out);
      manifest.write(sa.out);
    }
  });

  // ------------------------------------------------------------- gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  struct {
    std::string dims = "8,4,2", loss = "both";
    std::uint32_t cases = 25;
    double tol = 1e-4;
    std::uint64_t seed = 42;
  } gc;
  gradcheck->add_option("--dims", gc.dims, "feature,hidden,components");
  gradcheck->add_option("--cases", gc.cases, "random configurations to probe");
  gradcheck->add_option("--tol", gc.tol, "max relative error tolerance");
  gradcheck->add_option("--loss", gc.loss, "nll, weighted or both");
  gradcheck->add_option("--seed", gc.seed, "case seed");
  gradcheck->callback([&] {
    const auto d = parse_csv_doubles(gc.dims, 3);
    int loss;
    if (gc.loss == "nll") loss = 0;
    else if (gc.loss == "weighted") loss = 1;
    else if (gc.loss == "both") loss = 2;
    else throw ExitWith{1, "unknown loss '" + gc.loss + "' (nll, weighted, both)"};
    double max_rel = 0.0;
    int pass = 0;
    check(geovmf_grad_check(static_cast<uint32_t>(d[0]), static_cast<uint32_t>(d[1]),
                            static_cast<uint32_t>(d[2]), gc.cases, gc.seed, gc.tol, loss,
                            &max_rel, &pass));
    std::printf("max relative error %.3e over %u cases (tol %.1e): %s\n", max_rel, gc.cases,
                gc.tol, pass ? "PASS" : "FAIL");
    if (!pass && gc.cases > 0) throw ExitWith{3, "gradient check failed"};
    if (gc.cases == 0) std::fprintf(stderr, "warning: 0 cases checked, vacuous pass\n");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // usage problems exit 1
  } catch (const ExitWith& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return e.code;
  }
  return 0;
}
