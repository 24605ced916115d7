#include "staykate/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "staykate/errors.hpp"

namespace staykate {

std::string normalize_surface(std::string_view surface) {
  std::string out;
  out.reserve(surface.size());
  bool pending_space = false;
  for (char c : surface) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

MatchReport match_entities(const ExtractionResult& predicted, std::span<const EntitySpan> gold) {
  for (const auto& g : gold) {
    if (!predicted.sentence_id.empty() && g.sentence_id != predicted.sentence_id)
      throw ValidationError("match_entities: prediction for " + predicted.sentence_id +
                            " compared with gold from " + g.sentence_id);
  }
  struct Item {
    std::string type;
    std::string surface;
    std::string key;
    bool used = false;
  };
  std::vector<Item> preds;
  for (const auto& [type, surfaces] : predicted.predicted)
    for (const auto& s : surfaces) preds.push_back({type, s, normalize_surface(s)});
  std::vector<Item> golds;
  for (const auto& g : gold) golds.push_back({g.entity_type, g.surface, normalize_surface(g.surface)});

  MatchReport report;
  report.sentence_id = predicted.sentence_id;
  report.parse_status = predicted.parse_status;

  for (auto& p : preds) {
    for (auto& g : golds) {
      if (!g.used && g.type == p.type && g.key == p.key) {
        p.used = g.used = true;
        report.true_positives.push_back({p.type, p.surface});
        break;
      }
    }
  }
  for (auto& p : preds) {
    if (p.used) continue;
    for (auto& g : golds) {
      if (!g.used && g.key == p.key) {
        p.used = g.used = true;
        report.wrong_type.push_back({p.type, g.type, p.surface});
        break;
      }
    }
  }
  for (const auto& p : preds)
    if (!p.used) report.overpredicted.push_back({p.type, p.surface});
  for (const auto& g : golds)
    if (!g.used) report.oversighted.push_back({g.type, g.surface});
  return report;
}

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

void finish_rates(ErrorStats& e) {
  e.overpredicted_rate = ratio(e.overpredicted, e.predictions);
  e.wrong_type_rate = ratio(e.wrong_type, e.predictions);
  e.oversight_rate = ratio(e.oversight, e.gold);
}

}  // namespace

TypeMetrics metrics_from_counts(double tp, double fp, double fn) {
  TypeMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.support = tp + fn;
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
  return m;
}

EvalReport f1_scores(std::span<const MatchReport> reports, const LabelScheme& scheme) {
  EvalReport out;
  out.entity_types = scheme.entity_types();
  auto& pm = out.metrics;

  struct Counts {
    double tp = 0, fp = 0, fn = 0;
  };
  std::map<std::string, Counts> counts;
  for (const auto& type : scheme.entity_types()) {
    counts[type];
    pm.errors_by_type[type];
  }
  const auto bucket = [&](const std::string& type) -> Counts& {
    if (!scheme.contains(type)) throw ValidationError("entity type outside scheme: " + type);
    return counts[type];
  };

  for (const auto& r : reports) {
    pm.sentences += 1;
    if (r.parse_status == ParseStatus::kFailed) pm.parse_failures += 1;
    for (const auto& tp : r.true_positives) {
      bucket(tp.entity_type).tp += 1;
      pm.errors_by_type[tp.entity_type].predictions += 1;
      pm.errors_by_type[tp.entity_type].gold += 1;
    }
    for (const auto& w : r.wrong_type) {
      bucket(w.predicted_type).fp += 1;
      bucket(w.gold_type).fn += 1;
      pm.errors_by_type[w.predicted_type].predictions += 1;
      pm.errors_by_type[w.predicted_type].wrong_type += 1;
      pm.errors_by_type[w.gold_type].gold += 1;
      pm.confusions[w.predicted_type + " -> " + w.gold_type] += 1;
    }
    for (const auto& o : r.overpredicted) {
      bucket(o.entity_type).fp += 1;
      pm.errors_by_type[o.entity_type].predictions += 1;
      pm.errors_by_type[o.entity_type].overpredicted += 1;
    }
    for (const auto& o : r.oversighted) {
      bucket(o.entity_type).fn += 1;
      pm.errors_by_type[o.entity_type].gold += 1;
      pm.errors_by_type[o.entity_type].oversight += 1;
    }
    pm.errors.predictions += static_cast<double>(r.num_predicted());
    pm.errors.gold += static_cast<double>(r.num_gold());
    pm.errors.overpredicted += static_cast<double>(r.overpredicted.size());
    pm.errors.oversight += static_cast<double>(r.oversighted.size());
    pm.errors.wrong_type += static_cast<double>(r.wrong_type.size());
  }

  Counts total;
  double f1_sum = 0.0;
  int f1_count = 0;
  for (const auto& type : scheme.entity_types()) {
    const auto& c = counts[type];
    pm.per_type[type] = metrics_from_counts(c.tp, c.fp, c.fn);
    total.tp += c.tp;
    total.fp += c.fp;
    total.fn += c.fn;
    if (c.tp + c.fp + c.fn > 0) {
      f1_sum += pm.per_type[type].f1;
      ++f1_count;
    }
    finish_rates(pm.errors_by_type[type]);
  }
  pm.micro = metrics_from_counts(total.tp, total.fp, total.fn);
  pm.macro_f1 = f1_count ? f1_sum / f1_count : 0.0;
  finish_rates(pm.errors);
  return out;
}

namespace {

void add(TypeMetrics& acc, const TypeMetrics& m) {
  acc.precision += m.precision;
  acc.recall += m.recall;
  acc.f1 += m.f1;
  acc.support += m.support;
  acc.tp += m.tp;
  acc.fp += m.fp;
  acc.fn += m.fn;
}

void scale(TypeMetrics& m, double s) {
  m.precision *= s;
  m.recall *= s;
  m.f1 *= s;
  m.support *= s;
  m.tp *= s;
  m.fp *= s;
  m.fn *= s;
}

void add(ErrorStats& acc, const ErrorStats& e) {
  acc.predictions += e.predictions;
  acc.gold += e.gold;
  acc.overpredicted += e.overpredicted;
  acc.oversight += e.oversight;
  acc.wrong_type += e.wrong_type;
  acc.overpredicted_rate += e.overpredicted_rate;
  acc.wrong_type_rate += e.wrong_type_rate;
  acc.oversight_rate += e.oversight_rate;
}

void scale(ErrorStats& e, double s) {
  e.predictions *= s;
  e.gold *= s;
  e.overpredicted *= s;
  e.oversight *= s;
  e.wrong_type *= s;
  e.overpredicted_rate *= s;
  e.wrong_type_rate *= s;
  e.oversight_rate *= s;
}

}  // namespace

EvalReport aggregate_runs(std::span<const EvalReport> pools) {
  if (pools.empty()) throw ValidationError("aggregate_runs: no pool reports");
  EvalReport out;
  out.entity_types = pools.front().entity_types;
  auto& mean = out.metrics;
  for (const auto& pool : pools) {
    if (pool.entity_types != out.entity_types)
      throw ValidationError("aggregate_runs: inconsistent entity types across pools");
    const auto& m = pool.metrics;
    out.runs.push_back(m);
    mean.sentences += m.sentences;
    mean.parse_failures += m.parse_failures;
    for (const auto& type : out.entity_types) {
      add(mean.per_type[type], m.per_type.at(type));
      add(mean.errors_by_type[type], m.errors_by_type.at(type));
    }
    add(mean.micro, m.micro);
    mean.macro_f1 += m.macro_f1;
    add(mean.errors, m.errors);
    for (const auto& [pair, n] : m.confusions) mean.confusions[pair] += n;
  }
  const double s = 1.0 / static_cast<double>(pools.size());
  mean.sentences *= s;
  mean.parse_failures *= s;
  for (auto& [type, tm] : mean.per_type) scale(tm, s);
  for (auto& [type, e] : mean.errors_by_type) scale(e, s);
  scale(mean.micro, s);
  mean.macro_f1 *= s;
  scale(mean.errors, s);
  for (auto& [pair, n] : mean.confusions) n *= s;
  return out;
}

namespace {

OrderedJson to_json(const TypeMetrics& m) {
  return OrderedJson{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
                     {"support", m.support},     {"tp", m.tp},         {"fp", m.fp},
                     {"fn", m.fn}};
}

OrderedJson to_json(const ErrorStats& e) {
  return OrderedJson{{"predictions", e.predictions},
                     {"gold", e.gold},
                     {"overpredicted", e.overpredicted},
                     {"oversight", e.oversight},
                     {"wrong_type", e.wrong_type},
                     {"overpredicted_rate", e.overpredicted_rate},
                     {"oversight_rate", e.oversight_rate},
                     {"wrong_type_rate", e.wrong_type_rate}};
}

OrderedJson to_json(const PoolMetrics& m, const std::vector<std::string>& types) {
  OrderedJson j;
  if (m.seed) j["seed"] = *m.seed;
  j["sentences"] = m.sentences;
  j["parse_failures"] = m.parse_failures;
  OrderedJson per_type = OrderedJson::object();
  OrderedJson errors_by_type = OrderedJson::object();
  for (const auto& t : types) {
    per_type[t] = to_json(m.per_type.at(t));
    errors_by_type[t] = to_json(m.errors_by_type.at(t));
  }
  j["per_type"] = std::move(per_type);
  j["micro"] = to_json(m.micro);
  j["macro_f1"] = m.macro_f1;
  j["errors"] = to_json(m.errors);
  j["errors_by_type"] = std::move(errors_by_type);
  OrderedJson conf = OrderedJson::object();
  for (const auto& [pair, n] : m.confusions) conf[pair] = n;
  j["confusions"] = std::move(conf);
  return j;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string lpad(const std::string& s, std::size_t width) {
  return s.size() < width ? std::string(width - s.size(), ' ') + s : s;
}

std::size_t name_width(const EvalReport& report) {
  std::size_t w = std::string("micro avg").size();
  for (const auto& t : report.entity_types) w = std::max(w, t.size());
  return w + 2;
}

}  // namespace

OrderedJson to_json(const EvalReport& report) {
  OrderedJson j;
  j["entity_types"] = report.entity_types;
  j["metadata"] = {{"matching", "exact surface after case-fold and whitespace collapse"},
                   {"mention_counting", "per mention (multiset)"},
                   {"runs_averaged", report.runs.size()}};
  j["mean"] = to_json(report.metrics, report.entity_types);
  OrderedJson runs = OrderedJson::array();
  for (const auto& r : report.runs) runs.push_back(to_json(r, report.entity_types));
  j["runs"] = std::move(runs);
  return j;
}

std::string render_table(const EvalReport& report) {
  const auto w = name_width(report);
  std::string out = pad("", w) + lpad("precision", 10) + lpad("recall", 10) + lpad("f1", 10) +
                    lpad("support", 10) + "\n\n";
  const auto row = [&](const std::string& name, const TypeMetrics& m) {
    out += pad(name, w) + lpad(fmt("%.4f", m.precision), 10) + lpad(fmt("%.4f", m.recall), 10) +
           lpad(fmt("%.4f", m.f1), 10) + lpad(fmt("%g", m.support), 10) + "\n";
  };
  for (const auto& t : report.entity_types) row(t, report.metrics.per_type.at(t));
  out += "\n";
  row("micro avg", report.metrics.micro);
  out += pad("macro f1", w) + lpad(fmt("%.4f", report.metrics.macro_f1), 30) + "\n";
  if (!report.runs.empty()) {
    out += "\nmicro f1 per pool:";
    for (const auto& r : report.runs) {
      out += " ";
      if (r.seed) out += "seed " + std::to_string(*r.seed) + "=";
      out += fmt("%.4f", r.micro.f1);
    }
    out += "\n";
  }
  return out;
}

std::string render_error_table(const EvalReport& report) {
  const auto w = name_width(report);
  std::string out = pad("", w) + lpad("overpred", 10) + lpad("rate", 8) + lpad("oversight", 11) +
                    lpad("rate", 8) + lpad("wrongtype", 11) + lpad("rate", 8) + "\n\n";
  const auto row = [&](const std::string& name, const ErrorStats& e) {
    out += pad(name, w) + lpad(fmt("%.2f", e.overpredicted), 10) +
           lpad(fmt("%.3f", e.overpredicted_rate), 8) + lpad(fmt("%.2f", e.oversight), 11) +
           lpad(fmt("%.3f", e.oversight_rate), 8) + lpad(fmt("%.2f", e.wrong_type), 11) +
           lpad(fmt("%.3f", e.wrong_type_rate), 8) + "\n";
  };
  for (const auto& t : report.entity_types) row(t, report.metrics.errors_by_type.at(t));
  out += "\n";
  row("all", report.metrics.errors);
  if (!report.metrics.confusions.empty()) {
    out += "\nwrong entity type (predicted -> gold):\n";
    for (const auto& [pair, n] : report.metrics.confusions) out += "  " + pair + ": " + fmt("%.2f", n) + "\n";
  }
  return out;
}

}  // namespace staykate
