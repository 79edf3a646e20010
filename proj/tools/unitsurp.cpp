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

// unitsurp command-line driver.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "unitsurp/error.hpp"
#include "unitsurp/eyetrack/eyetrack.hpp"
#include "unitsurp/fst/att_format.hpp"
#include "unitsurp/fst/operations.hpp"
#include "unitsurp/io/tsv.hpp"
#include "unitsurp/lm/bpe.hpp"
#include "unitsurp/lm/ngram.hpp"
#include "unitsurp/regression/regression.hpp"
#include "unitsurp/rng.hpp"
#include "unitsurp/surprisal/surprisal.hpp"
#include "unitsurp/units/inventory.hpp"

#ifndef UNITSURP_VERSION
#define UNITSURP_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace unitsurp;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path);
  return in;
}

// Writes to a sibling temp file and renames on commit, so a failed run
// leaves nothing behind. "-" is stdout.
class Output {
 public:
  explicit Output(std::string path) : path_(std::move(path)) {
    if (path_ == "-") return;
    tmp_ = path_ + ".tmp";
    file_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!file_) fail(ErrorCode::kIoError, "cannot write " + path_);
  }
  Output(const Output&) = delete;
  Output& operator=(const Output&) = delete;
  ~Output() {
    if (!tmp_.empty() && !done_) {
      file_.close();
      std::error_code ec;
      fs::remove(tmp_, ec);
    }
  }

  std::ostream& stream() { return path_ == "-" ? std::cout : file_; }

  void commit() {
    if (path_ == "-") {
      std::cout.flush();
      return;
    }
    file_.close();
    if (!file_) fail(ErrorCode::kIoError, "write failed for " + path_);
    fs::rename(tmp_, path_);
    done_ = true;
  }

 private:
  std::string path_, tmp_;
  std::ofstream file_;
  bool done_ = false;
};

// Provenance for every artifact.
struct Run {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;

  std::vector<std::string> header() const {
    return {std::string("unitsurp ") + UNITSURP_VERSION + " " + command, "config " + config_hash,
            "seed " + std::to_string(seed)};
  }
  nlohmann::json json() const {
    return {{"tool", std::string("unitsurp ") + UNITSURP_VERSION},
            {"command", command},
            {"config", config_hash},
            {"seed", seed}};
  }
};

std::string fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

UnitInventorySpec preset(const std::string& name) {
  UnitInventorySpec s;
  if (name == "tokens") {
    s.kind = InventoryKind::kTokens;
    s.attribution = Attribution::kNone;
  } else if (name == "characters") {
    s.kind = InventoryKind::kCharacters;
    s.attribution = Attribution::kNone;
  } else if (name == "leading" || name == "trailing" || name == "absorb") {
    s.kind = InventoryKind::kAcontextual;
    s.attribution = name == "leading"    ? Attribution::kLeading
                    : name == "trailing" ? Attribution::kTrailing
                                         : Attribution::kAbsorb;
  } else if (name == "contextual") {
    s.kind = InventoryKind::kContextual;
    s.attribution = Attribution::kAbsorb;
    s.rules = default_rules();
  } else {
    fail(ErrorCode::kInvalidArgument,
         "unknown inventory '" + name +
             "' (tokens, characters, leading, trailing, absorb, contextual or a spec file)");
  }
  return s;
}

// A preset name or a JSON spec file.
UnitInventorySpec load_inventory(const std::string& value) {
  if (fs::is_regular_file(value)) return UnitInventorySpec::from_json(read_file(value));
  return preset(value);
}

std::string inventory_label(const std::string& value) {
  return fs::is_regular_file(value) ? fs::path(value).stem().string() : value;
}

std::vector<TrialText> load_trials(const std::string& path) {
  auto in = open_in(path);
  return read_trials_tsv(in);
}

SurprisalTable load_surprisal(const std::string& path) {
  auto in = open_in(path);
  return read_surprisal_tsv(in);
}

// The model, its optional subword tokenizer, and the machines built over
// them.
struct Model {
  std::shared_ptr<NGramModel> lm;
  std::optional<BpeTokenizer> bpe;

  static Model load(const std::string& lm_path, const std::string& bpe_path) {
    Model m;
    m.lm = std::make_shared<NGramModel>(NGramModel::load(lm_path));
    if (!bpe_path.empty()) {
      m.bpe = BpeTokenizer::load(bpe_path);
      if (!(*m.bpe->alphabet() == m.lm->alphabet())) {
        fail(ErrorCode::kAlphabetMismatch, "tokenizer and model vocabularies differ");
      }
    } else if (!(m.lm->alphabet() == Alphabet::bytes(false))) {
      fail(ErrorCode::kAlphabetMismatch, "model is not byte-level; pass its tokenizer with --bpe");
    }
    return m;
  }

  SymbolString encode(const std::string& text) const {
    return bpe ? bpe->encode(text) : lm->alphabet().encode_bytes(text);
  }

  UnitParser parser(const UnitInventorySpec& spec) const {
    if (bpe || spec.kind == InventoryKind::kTokens) {
      return UnitParser::compile_for_tokens(spec, lm->alphabet_ptr());
    }
    return UnitParser::compile(spec);
  }

  std::vector<Trial> trials(const std::vector<TrialText>& texts) const {
    std::vector<Trial> out;
    for (const auto& t : texts) out.push_back({t.id, encode(t.text)});
    return out;
  }
};

// Character spans are computed on bytes. Units of every inventory but the
// tokens one do not depend on the model vocabulary.
UnitParser byte_parser(const UnitInventorySpec& spec, bool subword) {
  if (spec.kind == InventoryKind::kTokens) {
    if (subword) {
      fail(ErrorCode::kInvalidArgument,
           "the tokens inventory of a subword model has no byte-level parser");
    }
    return UnitParser::compile_for_tokens(spec, make_alphabet(Alphabet::bytes(false)));
  }
  return UnitParser::compile(spec);
}

struct BeamFlags {
  BeamConfig beam;
  bool no_pruning = false;
  bool no_fast_path = false;

  void add(CLI::App* app) {
    app->add_option("--beam-k", beam.beam_k, "Beam width")->capture_default_str();
    app->add_option("--beam-prune", beam.beam_prune, "Drop hypotheses below this share of the beam mass")
        ->capture_default_str();
    app->add_option("--fst-prune", beam.fst_prune, "Drop machine configurations below this share")
        ->capture_default_str();
    app->add_option("--max-expand", beam.max_expand_steps, "Input symbols read between two outputs")
        ->capture_default_str();
    app->add_option("--stop-mass", beam.expand_stop_mass, "Stop expanding below this remaining mass")
        ->capture_default_str();
    app->add_flag("--no-pruning", no_pruning, "Exact search; only for bounded-length models");
    app->add_flag("--no-fast-path", no_fast_path, "Search from co-universal states too");
  }

  BeamConfig get() const {
    BeamConfig b = no_pruning ? BeamConfig::no_pruning() : beam;
    if (no_fast_path) b.universal_fast_path = false;
    b.validate();
    return b;
  }
};

// Commands.

struct CompileFst {
  std::string inventory = "leading";
  std::string bpe;
  std::string out;
  std::string report = "-";

  void run(const Run& r) const {
    const auto spec = load_inventory(inventory);
    const auto parser = bpe.empty() ? byte_parser(spec, false)
                                    : UnitParser::compile_for_tokens(spec, BpeTokenizer::load(bpe).alphabet());
    // Sizes are those of the single-output machine, as minimize builds it.
    const Transducer f = minimize(parser.fst());
    const auto uni = universal_states(f);
    if (!out.empty()) {
      Output o(out);
      write_header_comments(o.stream(), r.header());
      o.stream() << serialize(f);
      o.commit();
    }
    Output rep(report);
    write_header_comments(rep.stream(), r.header());
    rep.stream() << "inventory\tstates\tarcs\tuniversal\n"
                 << tsv_escape(spec.name()) << '\t' << f.num_states() << '\t' << f.num_arcs() << '\t'
                 << uni.size() << (uni.size() == f.num_states() ? " (all)" : "") << '\n';
    rep.commit();
  }
};

struct Segment {
  std::string inventory = "leading";
  std::string text;
  std::string trials;
  std::string out = "-";

  void run(const Run& r) const {
    const auto parser = byte_parser(load_inventory(inventory), false);
    std::vector<TrialText> items;
    if (!trials.empty()) items = load_trials(trials);
    if (!text.empty()) items.push_back({"text", text});
    if (items.empty()) fail(ErrorCode::kInvalidArgument, "give --text or --trials");
    Output o(out);
    write_header_comments(o.stream(), r.header());
    o.stream() << "trial\tposition\tunit\n";
    for (const auto& t : items) {
      const auto units = parser.segment_text(t.text);
      for (std::size_t i = 0; i < units.size(); ++i) {
        o.stream() << tsv_escape(t.id) << '\t' << i + 1 << '\t' << tsv_escape(units[i]) << '\n';
      }
    }
    o.commit();
  }
};

struct TrainLm {
  std::string corpus;
  int order = 3;
  std::string smoothing = "kn";
  double lambda = 1.0;
  std::size_t bpe_merges = 0;
  std::string bpe_out;
  std::string out;

  void run(const Run& r) const {
    std::vector<std::string> lines;
    {
      auto in = open_in(corpus);
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
      }
    }
    std::optional<BpeTokenizer> bpe;
    if (bpe_merges > 0) {
      if (bpe_out.empty()) fail(ErrorCode::kInvalidArgument, "--bpe-merges needs --bpe-out");
      bpe = BpeTokenizer::learn(lines, bpe_merges);
    }
    auto alphabet = bpe ? bpe->alphabet() : make_alphabet(Alphabet::bytes(false));
    std::vector<SymbolString> seqs;
    for (const auto& l : lines) seqs.push_back(bpe ? bpe->encode(l) : alphabet->encode_bytes(l));
    Smoothing sm;
    sm.kind = smoothing == "kn" ? SmoothingKind::kKneserNey : parse_smoothing(smoothing);
    sm.lambda = lambda;
    const auto lm = NGramModel::train(seqs, alphabet, order, sm);

    auto with_provenance = [&](const std::string& text) {
      auto j = nlohmann::json::parse(text);
      j["provenance"] = r.json();
      return j.dump();
    };
    if (bpe) {
      Output o(bpe_out);
      o.stream() << with_provenance(bpe->to_json()) << '\n';
      o.commit();
    }
    Output o(out);
    o.stream() << with_provenance(lm.to_json()) << '\n';
    o.commit();
  }
};

struct Score {
  std::string lm, bpe, inventory = "leading", trials, unigram;
  std::string out = "-";
  BeamFlags beam;

  void run(const Run& r, unsigned jobs) const {
    const auto m = Model::load(lm, bpe);
    const auto parser = m.parser(load_inventory(inventory));
    ScoreOptions opt;
    opt.beam = beam.get();
    opt.jobs = jobs;
    auto table = score_corpus(m.lm, parser, m.trials(load_trials(trials)), opt);
    if (!unigram.empty()) {
      auto in = open_in(unigram);
      attach_unigram(table, read_unigram_tsv(in));
    }
    Output o(out);
    write_surprisal_tsv(o.stream(), table, r.header());
    o.commit();
  }
};

struct Unigram {
  std::string lm, bpe, inventory = "leading", trials;
  std::size_t samples = 1000;
  std::size_t max_len = 50;
  std::uint64_t seed = 0;
  std::string out = "-";
  BeamFlags beam;

  void run(const Run& r, unsigned jobs) const {
    const auto m = Model::load(lm, bpe);
    const auto parser = m.parser(load_inventory(inventory));
    std::set<std::string> forms;
    for (const auto& t : m.trials(load_trials(trials))) {
      for (const auto& u : parser.segment(t.source)) forms.insert(parser.unit_text(u));
    }
    UnigramOptions opt;
    opt.samples = samples;
    opt.max_len = max_len;
    opt.seed = seed;
    opt.beam = beam.get();
    opt.jobs = jobs;
    const auto est = unigram_estimate(m.lm, parser, {forms.begin(), forms.end()}, opt);
    Output o(out);
    write_unigram_tsv(o.stream(), est, r.header());
    o.commit();
  }
};

struct GenFixations {
  std::string inventory = "leading", trials, surprisal;
  FixationGenOptions opt;
  std::string out = "-";

  void run(const Run& r) const {
    const auto parser = byte_parser(load_inventory(inventory), false);
    const auto fx = generate_fixations(parser, load_trials(trials), load_surprisal(surprisal), opt);
    Output o(out);
    write_header_comments(o.stream(), r.header());
    write_fixations_csv(o.stream(), fx);
    o.commit();
  }
};

struct Reprocess {
  std::string inventory = "leading", trials, fixations, surprisal;
  bool subword = false;
  bool keep_unfixated = false, keep_unlagged = false, allow_missing_unigram = false;
  std::optional<bool> drop_zero;
  std::string out = "-";
  std::string stages;

  void run(const Run& r, unsigned jobs) const {
    const auto spec = load_inventory(inventory);
    const auto parser = byte_parser(spec, subword);
    std::vector<FixationEvent> fx;
    {
      auto in = open_in(fixations);
      fx = read_fixations_csv(in);
    }
    const auto measures = measure_corpus(parser, load_trials(trials), fx, jobs);
    TableFilters f;
    f.drop_unfixated = !keep_unfixated;
    f.drop_unlagged = !keep_unlagged;
    f.require_unigram = !allow_missing_unigram;
    f.drop_zero_surprisal = drop_zero.value_or(spec.kind == InventoryKind::kCharacters);
    const auto table = build_table(measures, load_surprisal(surprisal), f);
    Output o(out);
    write_reading_tsv(o.stream(), table, r.header());
    std::optional<Output> so;
    std::ostream* s = &std::cerr;
    if (!stages.empty()) {
      so.emplace(stages);
      write_header_comments(so->stream(), r.header());
      s = &so->stream();
    }
    write_stage_tsv(*s, table.stages);
    o.commit();
    if (so) so->commit();
  }
};

struct FitEval {
  std::vector<std::string> readings;  // name=path
  std::vector<std::string> measures{"FF", "GD", "TRT"};
  std::size_t bootstrap = 1000, permutations = 1000;
  std::uint64_t seed = 0;
  std::string baseline, target;
  std::string out = "-";
  std::string plot;

  void run(const Run& r, unsigned jobs) const {
    const ModelSpec bl = baseline.empty() ? baseline_spec() : ModelSpec::from_json(read_file(baseline));
    const ModelSpec tg = target.empty() ? target_spec() : ModelSpec::from_json(read_file(target));
    std::vector<EvalRow> rows;
    std::uint64_t k = 0;
    for (const auto& item : readings) {
      const auto eq = item.find('=');
      const std::string path = eq == std::string::npos ? item : item.substr(eq + 1);
      const std::string name = eq == std::string::npos ? fs::path(item).stem().string() : item.substr(0, eq);
      ReadingTable table;
      {
        auto in = open_in(path);
        table = read_reading_tsv(in);
      }
      for (const auto& ms : measures) {
        const Measure measure = parse_measure(ms);
        try {
          const auto d = make_dataset(table, measure);
          const auto loo = loo_cv(d, bl, tg, jobs);
          const auto ci = bootstrap_ci(loo.per_trial(), bootstrap, 0.95, derive_seed(seed, 2 * k));
          const double p = permutation_test(loo.diffs, permutations, derive_seed(seed, 2 * k + 1));
          rows.push_back({name, std::string(measure_name(measure)), loo.ll_baseline, loo.ll_target, loo.delta,
                          ci.first, ci.second, p});
        } catch (const Error& e) {
          throw e.within(name + " " + std::string(measure_name(measure)));
        }
        ++k;
      }
    }
    Output o(out);
    write_eval_tsv(o.stream(), rows, r.header());
    if (!plot.empty()) {
      Output po(plot);
      write_plot(po.stream(), rows, r);
      po.commit();
    }
    o.commit();
  }

  // Grouped bars of delta_llh in 1e-3 nats with bootstrap whiskers.
  static void write_plot(std::ostream& out, const std::vector<EvalRow>& rows, const Run& r) {
    std::vector<std::string> invs, meas;
    for (const auto& row : rows) {
      if (std::find(invs.begin(), invs.end(), row.inventory) == invs.end()) invs.push_back(row.inventory);
      if (std::find(meas.begin(), meas.end(), row.measure) == meas.end()) meas.push_back(row.measure);
    }
    double lo = 0.0, hi = 0.0;
    for (const auto& row : rows) {
      lo = std::min({lo, row.ci_lo * 1e3, row.delta_llh * 1e3});
      hi = std::max({hi, row.ci_hi * 1e3, row.delta_llh * 1e3});
    }
    if (hi - lo < 1e-9) hi = lo + 1.0;
    const double pad = 0.1 * (hi - lo);
    lo -= pad;
    hi += pad;
    const double panel_w = 60.0 + 40.0 * static_cast<double>(invs.size());
    const double left = 70, top = 30, plot_h = 260;
    const double width = left + panel_w * static_cast<double>(meas.size()) + 20;
    const double height = top + plot_h + 90 + 20.0 * static_cast<double>(invs.size());
    auto y = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };
    static const char* colors[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"};
    char buf[512];
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<!-- ";
    for (const auto& h : r.header()) out << h << "; ";
    out << "-->\n";
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                  "font-family=\"sans-serif\" font-size=\"12\">\n",
                  width, height);
    out << buf;
    std::snprintf(buf, sizeof buf, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", left,
                  y(0), width - 20, y(0));
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"14\" y=\"%.1f\" transform=\"rotate(-90 14 %.1f)\" text-anchor=\"middle\">"
                  "delta llh (1e-3 nats)</text>\n",
                  top + plot_h / 2, top + plot_h / 2);
    out << buf;
    for (int t = 0; t <= 4; ++t) {
      const double v = lo + (hi - lo) * t / 4.0;
      std::snprintf(buf, sizeof buf,
                    "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.2f</text>\n"
                    "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                    left - 6, y(v) + 4, v, left - 3, y(v), left, y(v));
      out << buf;
    }
    for (std::size_t mi = 0; mi < meas.size(); ++mi) {
      const double x0 = left + panel_w * static_cast<double>(mi);
      std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%s</text>\n",
                    x0 + panel_w / 2, top + plot_h + 20, meas[mi].c_str());
      out << buf;
      for (const auto& row : rows) {
        if (row.measure != meas[mi]) continue;
        const auto ii = static_cast<std::size_t>(std::find(invs.begin(), invs.end(), row.inventory) - invs.begin());
        const double cx = x0 + 30 + 40.0 * static_cast<double>(ii) + 15;
        const double v = row.delta_llh * 1e3;
        std::snprintf(buf, sizeof buf,
                      "<rect x=\"%.1f\" y=\"%.1f\" width=\"30\" height=\"%.1f\" fill=\"%s\"/>\n"
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                      cx - 15, std::min(y(v), y(0)), std::abs(y(v) - y(0)), colors[ii % 6], cx, y(row.ci_lo * 1e3),
                      cx, y(row.ci_hi * 1e3));
        out << buf;
        const auto stars = significance_stars(row.p);
        if (!stars.empty()) {
          std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%s</text>\n", cx,
                        std::min(y(row.ci_hi * 1e3), y(v)) - 4, stars.c_str());
          out << buf;
        }
      }
    }
    for (std::size_t ii = 0; ii < invs.size(); ++ii) {
      const double ly = top + plot_h + 45 + 20.0 * static_cast<double>(ii);
      std::snprintf(buf, sizeof buf,
                    "<rect x=\"%.1f\" y=\"%.1f\" width=\"12\" height=\"12\" fill=\"%s\"/>\n"
                    "<text x=\"%.1f\" y=\"%.1f\">",
                    left, ly - 10, colors[ii % 6], left + 18, ly);
      out << buf;
      for (char c : invs[ii]) {
        if (c == '<') out << "&lt;";
        else if (c == '&') out << "&amp;";
        else if (c == '>') out << "&gt;";
        else out << c;
      }
      out << "</text>\n";
    }
    out << "</svg>\n";
  }
};

struct Overlap {
  std::vector<std::string> inventories;
  std::string trials;
  std::string bpe;
  std::string out = "-";

  static std::string strip(const std::string& s) {
    const auto& ws = whitespace_bytes();
    auto is_ws = [&](char c) {
      return std::find(ws.begin(), ws.end(), static_cast<unsigned char>(c)) != ws.end();
    };
    std::size_t b = 0, e = s.size();
    while (b < e && is_ws(s[b])) ++b;
    while (e > b && is_ws(s[e - 1])) --e;
    return s.substr(b, e - b);
  }

  static double share(const std::set<std::string>& row, const std::set<std::string>& col) {
    if (row.empty()) return 0.0;
    std::size_t hit = 0;
    for (const auto& u : row) hit += col.count(u);
    return 100.0 * static_cast<double>(hit) / static_cast<double>(row.size());
  }

  void run(const Run& r) const {
    if (inventories.size() < 2) fail(ErrorCode::kInvalidArgument, "overlap needs two or more inventories");
    const auto texts = load_trials(trials);
    std::optional<BpeTokenizer> tok;
    if (!bpe.empty()) tok = BpeTokenizer::load(bpe);
    std::vector<std::string> names;
    std::vector<std::set<std::string>> kept, stripped;
    for (const auto& inv : inventories) {
      const auto spec = load_inventory(inv);
      std::set<std::string> k, s;
      if (spec.kind == InventoryKind::kTokens && tok) {
        for (const auto& t : texts) {
          for (Symbol x : tok->encode(t.text)) k.insert(tok->alphabet()->spelling(x));
        }
      } else {
        const auto parser = byte_parser(spec, false);
        for (const auto& t : texts) {
          for (auto& u : parser.segment_text(t.text)) k.insert(std::move(u));
        }
      }
      for (const auto& u : k) {
        auto v = strip(u);
        if (!v.empty()) s.insert(std::move(v));
      }
      names.push_back(inventory_label(inv));
      kept.push_back(std::move(k));
      stripped.push_back(std::move(s));
    }
    Output o(out);
    write_header_comments(o.stream(), r.header());
    o.stream() << "row\tcolumn\tstripped_pct\tkept_pct\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
      for (std::size_t j = 0; j < names.size(); ++j) {
        if (i == j) continue;
        o.stream() << tsv_escape(names[i]) << '\t' << tsv_escape(names[j]) << '\t'
                   << format_number(share(stripped[i], stripped[j])) << '\t'
                   << format_number(share(kept[i], kept[j])) << '\n';
      }
    }
    o.commit();
  }
};

// Config text minus where the results go, so relocating an output does
// not change its hash.
std::string content_config(const std::string& text) {
  static const char* skip[] = {"out=", "report=", "stages=", "plot=", "bpe-out="};
  std::istringstream in(text);
  std::string line, kept;
  while (std::getline(in, line)) {
    bool drop = false;
    for (const char* k : skip) drop = drop || line.rfind(k, 0) == 0;
    if (!drop) kept += line + '\n';
  }
  return kept;
}

const char* kInventoryHelp =
    "Unit inventory: tokens, characters, leading, trailing, absorb, contextual, or a JSON spec file";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unit-level surprisal from symbol-level language models"};
  app.set_version_flag("--version", std::string("unitsurp ") + UNITSURP_VERSION);
  app.set_config("--config", "", "TOML config file; flags given on the command line win");
  app.require_subcommand(1);
  unsigned jobs = 1;
  app.add_option("--jobs,-j", jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.fallthrough();

  CompileFst compile_fst;
  auto* c = app.add_subcommand("compile-fst", "Compile an inventory to a transducer and report its size");
  c->add_option("--inventory,-i", compile_fst.inventory, kInventoryHelp)->capture_default_str();
  c->add_option("--bpe", compile_fst.bpe, "Subword tokenizer; compiles over its vocabulary");
  c->add_option("--out,-o", compile_fst.out, "AT&T transducer file");
  c->add_option("--report", compile_fst.report, "States/arcs/universal report")->capture_default_str();

  Segment segment;
  auto* sg = app.add_subcommand("segment", "Split text into units");
  sg->add_option("--inventory,-i", segment.inventory, kInventoryHelp)->capture_default_str();
  sg->add_option("--text", segment.text, "Text to segment");
  sg->add_option("--trials", segment.trials, "Trials TSV (trial, text)");
  sg->add_option("--out,-o", segment.out)->capture_default_str();

  TrainLm train;
  auto* tr = app.add_subcommand("train-lm", "Train an n-gram model over bytes or subword tokens");
  tr->add_option("--corpus", train.corpus, "One sequence per line")->required();
  tr->add_option("--order", train.order)->capture_default_str()->check(CLI::PositiveNumber);
  tr->add_option("--smoothing", train.smoothing, "kn or add")->capture_default_str();
  tr->add_option("--lambda", train.lambda, "Add-lambda constant")->capture_default_str();
  tr->add_option("--bpe-merges", train.bpe_merges, "Learn a subword tokenizer with this many merges");
  tr->add_option("--bpe-out", train.bpe_out, "Where to write the tokenizer");
  tr->add_option("--out,-o", train.out, "Model JSON")->required();

  Score score;
  auto* sc = app.add_subcommand("score", "Contextual surprisal per unit");
  sc->add_option("--lm", score.lm, "Model JSON")->required();
  sc->add_option("--bpe", score.bpe, "Tokenizer of a subword model");
  sc->add_option("--inventory,-i", score.inventory, kInventoryHelp)->capture_default_str();
  sc->add_option("--trials", score.trials, "Trials TSV (trial, text)")->required();
  sc->add_option("--unigram", score.unigram, "Unigram TSV to attach");
  sc->add_option("--out,-o", score.out)->capture_default_str();
  score.beam.add(sc);

  Unigram unigram;
  auto* ug = app.add_subcommand("unigram", "Monte Carlo unigram surprisal of the units in the trials");
  ug->add_option("--lm", unigram.lm, "Model JSON")->required();
  ug->add_option("--bpe", unigram.bpe, "Tokenizer of a subword model");
  ug->add_option("--inventory,-i", unigram.inventory, kInventoryHelp)->capture_default_str();
  ug->add_option("--trials", unigram.trials, "Trials TSV; candidates are their units")->required();
  ug->add_option("--samples", unigram.samples)->capture_default_str()->check(CLI::PositiveNumber);
  ug->add_option("--max-len", unigram.max_len, "Symbols per sample")->capture_default_str();
  ug->add_option("--seed", unigram.seed)->capture_default_str();
  ug->add_option("--out,-o", unigram.out)->capture_default_str();
  unigram.beam.add(ug);

  GenFixations gen;
  auto* gf = app.add_subcommand("gen-fixations", "Synthetic scanpaths driven by surprisal");
  gf->add_option("--inventory,-i", gen.inventory, kInventoryHelp)->capture_default_str();
  gf->add_option("--trials", gen.trials, "Trials TSV")->required();
  gf->add_option("--surprisal", gen.surprisal, "Surprisal TSV of the same inventory")->required();
  gf->add_option("--participants", gen.opt.participants)->capture_default_str();
  gf->add_option("--seed", gen.opt.seed)->capture_default_str();
  gf->add_option("--base-log-ms", gen.opt.base_log_ms)->capture_default_str();
  gf->add_option("--surprisal-effect", gen.opt.surprisal_effect, "Per nat on log duration")->capture_default_str();
  gf->add_option("--length-effect", gen.opt.length_effect, "Per character")->capture_default_str();
  gf->add_option("--participant-sd", gen.opt.participant_sd)->capture_default_str();
  gf->add_option("--noise-sd", gen.opt.noise_sd)->capture_default_str();
  gf->add_option("--skip-prob", gen.opt.skip_prob)->capture_default_str();
  gf->add_option("--refixation-prob", gen.opt.refixation_prob)->capture_default_str();
  gf->add_option("--regression-prob", gen.opt.regression_prob)->capture_default_str();
  gf->add_option("--out,-o", gen.out, "Fixation CSV")->capture_default_str();

  Reprocess rep;
  auto* rp = app.add_subcommand("reprocess", "Aggregate fixations to units and build the reading table");
  rp->add_option("--inventory,-i", rep.inventory, kInventoryHelp)->capture_default_str();
  rp->add_option("--trials", rep.trials, "Trials TSV")->required();
  rp->add_option("--fixations", rep.fixations, "Fixation CSV")->required();
  rp->add_option("--surprisal", rep.surprisal, "Surprisal TSV with unigram attached")->required();
  rp->add_flag("--subword", rep.subword, "Surprisal came from a subword model");
  rp->add_flag("--keep-unfixated", rep.keep_unfixated);
  rp->add_flag("--keep-unlagged", rep.keep_unlagged, "Keep the first two units of each trial");
  rp->add_flag("--allow-missing-unigram", rep.allow_missing_unigram);
  rp->add_flag("--drop-zero-surprisal,!--keep-zero-surprisal", rep.drop_zero,
               "Default: drop for the characters inventory only");
  rp->add_option("--out,-o", rep.out, "Reading table TSV")->capture_default_str();
  rp->add_option("--stages", rep.stages, "Stage count TSV (default stderr)");

  FitEval fe;
  auto* ev = app.add_subcommand("fit-eval", "Leave-one-trial-out delta llh per inventory and measure");
  ev->add_option("--reading", fe.readings, "name=path of a reading table; repeatable")->required();
  ev->add_option("--measure", fe.measures, "FF, GD, TRT")->capture_default_str();
  ev->add_option("--bootstrap", fe.bootstrap)->capture_default_str()->check(CLI::PositiveNumber);
  ev->add_option("--permutations", fe.permutations)->capture_default_str()->check(CLI::PositiveNumber);
  ev->add_option("--seed", fe.seed)->capture_default_str();
  ev->add_option("--baseline-spec", fe.baseline, "ModelSpec JSON");
  ev->add_option("--target-spec", fe.target, "ModelSpec JSON");
  ev->add_option("--out,-o", fe.out)->capture_default_str();
  ev->add_option("--plot", fe.plot, "SVG bar chart");

  Overlap ov;
  auto* ol = app.add_subcommand("overlap", "Shared unit forms between inventories");
  ol->add_option("--inventory,-i", ov.inventories, "Repeatable; see compile-fst")->required();
  ol->add_option("--trials", ov.trials, "Trials TSV")->required();
  ol->add_option("--bpe", ov.bpe, "Tokenizer for the tokens inventory");
  ol->add_option("--out,-o", ov.out)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  Run r;
  r.command = sub->get_name();
  r.config_hash = fnv1a(r.command + "\n" + content_config(sub->config_to_str(true, false)));
  if (sub == ug) r.seed = unigram.seed;
  if (sub == gf) r.seed = gen.opt.seed;
  if (sub == ev) r.seed = fe.seed;

  try {
    if (sub == c) compile_fst.run(r);
    else if (sub == sg) segment.run(r);
    else if (sub == tr) train.run(r);
    else if (sub == sc) score.run(r, jobs);
    else if (sub == ug) unigram.run(r, jobs);
    else if (sub == gf) gen.run(r);
    else if (sub == rp) rep.run(r, jobs);
    else if (sub == ev) fe.run(r, jobs);
    else if (sub == ol) ov.run(r);
  } catch (const Error& e) {
    std::cerr << "unitsurp " << r.command << ": error " << error_code_name(e.code()) << ": " << e.message()
              << '\n';
    return is_numeric_failure(e.code()) ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "unitsurp " << r.command << ": error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
