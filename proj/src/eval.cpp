#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

#include "io_util.hpp"
#include "threading.hpp"

namespace nstr {

namespace {

std::string lowercase_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::set<DocId> relevant_set(const QRelSet& qrels, QueryId qid) {
  std::set<DocId> rel;
  for (const QRel& r : qrels.judgments(qid)) {
    if (r.relevance >= 1) rel.insert(r.passage_id);
  }
  return rel;
}

}  // namespace

void RunResult::validate() const {
  for (const auto& [qid, ranked] : by_query) {
    std::set<DocId> seen;
    double prev = std::numeric_limits<double>::infinity();
    for (const ScoredDoc& doc : ranked) {
      check(seen.insert(doc.passage_id).second, Errc::state,
            "run: duplicate passage in ranking for query " + std::to_string(qid));
      check(doc.score <= prev, Errc::state,
            "run: scores not non-increasing for query " + std::to_string(qid));
      prev = doc.score;
    }
  }
}

void RunResult::save_trec(const std::string& path, const std::string& tag) const {
  auto out = open_out(path);
  for (const auto& [qid, ranked] : by_query) {
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      out << qid << " Q0 " << ranked[i].passage_id << ' ' << (i + 1) << ' '
          << format_double(ranked[i].score, 9) << ' ' << tag << '\n';
    }
  }
  check(out.good(), Errc::io, "write failed: " + path);
}

RunResult RunResult::load_trec(const std::string& path) {
  RunResult run;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    if (line.empty()) return;
    auto fields = split(line, ' ');
    check(fields.size() == 6, Errc::parse,
          "run: expected `qid Q0 pid rank score tag` at line " + std::to_string(line_no));
    QueryId qid = parse_i64(fields[0], "run query id", line_no);
    DocId pid = parse_i64(fields[2], "run passage id", line_no);
    double score = parse_double(fields[4], "run score", line_no);
    run.by_query[qid].push_back(ScoredDoc{pid, score});
  });
  run.validate();
  return run;
}

double MetricReport::find(const std::string& metric, std::size_t k) const {
  for (const auto& m : aggregates) {
    if (m.metric == metric && m.k == k) return m.value;
  }
  fail(Errc::invalid, "metric not in report: " + metric + "@" + std::to_string(k));
}

void MetricReport::write_csv(const std::string& path) const {
  auto out = open_out(path);
  out << "metric,k,value\n";
  for (const auto& m : aggregates) {
    out << m.metric << ',' << m.k << ',' << format_double(m.value, 9) << '\n';
  }
  check(out.good(), Errc::io, "write failed: " + path);
}

void MetricReport::write_per_query_csv(const std::string& path) const {
  auto out = open_out(path);
  out << "qid,metric,k,value\n";
  for (const auto& [key, values] : per_query) {
    for (const auto& [qid, value] : values) {
      out << qid << ',' << key.first << ',' << key.second << ',' << format_double(value, 9)
          << '\n';
    }
  }
  check(out.good(), Errc::io, "write failed: " + path);
}

double mrr_at_k(const RunResult& run, const QRelSet& qrels, std::size_t k) {
  check(k >= 1, Errc::invalid, "mrr_at_k: k must be >= 1");
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& [qid, ranked] : run.by_query) {
    check(qrels.knows_query(qid), Errc::invalid,
          "mrr_at_k: query " + std::to_string(qid) + " has no qrels entry");
    std::set<DocId> rel = relevant_set(qrels, qid);
    double rr = 0.0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
      if (rel.count(ranked[i].passage_id) > 0) {
        rr = 1.0 / static_cast<double>(i + 1);
        break;
      }
    }
    total += rr;
    ++n;
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

double recall_at_k(const RunResult& run, const QRelSet& qrels, std::size_t k,
                   std::size_t* n_excluded) {
  check(k >= 1, Errc::invalid, "recall_at_k: k must be >= 1");
  double total = 0.0;
  std::size_t n = 0, excluded = 0;
  for (const auto& [qid, ranked] : run.by_query) {
    std::set<DocId> rel = relevant_set(qrels, qid);
    if (rel.empty()) {
      ++excluded;
      continue;
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
      if (rel.count(ranked[i].passage_id) > 0) ++hits;
    }
    total += static_cast<double>(hits) / static_cast<double>(rel.size());
    ++n;
  }
  if (n_excluded != nullptr) *n_excluded = excluded;
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

double answer_recall_at_k(const RunResult& run, const QueryCollection& queries,
                          const PassageCollection& passages, std::size_t k,
                          std::size_t* n_excluded) {
  check(k >= 1, Errc::invalid, "answer_recall_at_k: k must be >= 1");
  double total = 0.0;
  std::size_t n = 0, excluded = 0;
  for (const auto& [qid, ranked] : run.by_query) {
    const Query& query = queries.at(qid);
    if (query.answers.empty()) {
      ++excluded;
      continue;
    }
    std::vector<std::string> answers;
    answers.reserve(query.answers.size());
    for (const auto& a : query.answers) answers.push_back(lowercase_ascii(a));
    bool hit = false;
    for (std::size_t i = 0; i < std::min(k, ranked.size()) && !hit; ++i) {
      std::string text = lowercase_ascii(passages.at(ranked[i].passage_id).text);
      for (const auto& a : answers) {
        if (!a.empty() && text.find(a) != std::string::npos) {
          hit = true;
          break;
        }
      }
    }
    total += hit ? 1.0 : 0.0;
    ++n;
  }
  if (n_excluded != nullptr) *n_excluded = excluded;
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

double ndcg_at_k(const RunResult& run, const QRelSet& qrels, std::size_t k,
                 std::size_t* n_excluded) {
  check(k >= 1, Errc::invalid, "ndcg_at_k: k must be >= 1");
  double total = 0.0;
  std::size_t n = 0, excluded = 0;
  for (const auto& [qid, ranked] : run.by_query) {
    std::map<DocId, int> rel;
    std::vector<int> gains;
    for (const QRel& r : qrels.judgments(qid)) {
      rel[r.passage_id] = r.relevance;
      gains.push_back(r.relevance);
    }
    std::sort(gains.begin(), gains.end(), std::greater<int>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, gains.size()); ++i) {
      idcg += (std::pow(2.0, gains[i]) - 1.0) / std::log2(static_cast<double>(i + 2));
    }
    if (idcg == 0.0) {
      ++excluded;
      continue;
    }
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
      auto it = rel.find(ranked[i].passage_id);
      const int g = it == rel.end() ? 0 : it->second;
      dcg += (std::pow(2.0, g) - 1.0) / std::log2(static_cast<double>(i + 2));
    }
    total += dcg / idcg;
    ++n;
  }
  if (n_excluded != nullptr) *n_excluded = excluded;
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

MetricReport evaluate_run(const RunResult& run, const QRelSet& qrels,
                          const QueryCollection& queries, const PassageCollection& passages,
                          const std::vector<std::size_t>& ks) {
  run.validate();
  MetricReport report;
  bool any_answers = false;
  for (const auto& [qid, ranked] : run.by_query) {
    if (queries.contains(qid) && !queries.at(qid).answers.empty()) any_answers = true;
  }
  for (std::size_t k : ks) {
    report.aggregates.push_back(MetricValue{"mrr", k, mrr_at_k(run, qrels, k)});
    report.aggregates.push_back(MetricValue{"recall", k, recall_at_k(run, qrels, k)});
    if (any_answers) {
      report.aggregates.push_back(
          MetricValue{"answer_recall", k, answer_recall_at_k(run, queries, passages, k)});
    }
    report.aggregates.push_back(MetricValue{"ndcg", k, ndcg_at_k(run, qrels, k)});

    for (const auto& [qid, ranked] : run.by_query) {
      RunResult single;
      single.by_query[qid] = ranked;
      report.per_query[{"mrr", k}][qid] = mrr_at_k(single, qrels, k);
      std::size_t excluded = 0;
      double r = recall_at_k(single, qrels, k, &excluded);
      if (excluded == 0) report.per_query[{"recall", k}][qid] = r;
      double n = ndcg_at_k(single, qrels, k, &excluded);
      if (excluded == 0) report.per_query[{"ndcg", k}][qid] = n;
      if (any_answers && queries.contains(qid) && !queries.at(qid).answers.empty()) {
        report.per_query[{"answer_recall", k}][qid] =
            answer_recall_at_k(single, queries, passages, k);
      }
    }
  }
  return report;
}

RunResult retrieve(const EncoderParams& params, const DenseIndex& index,
                   const QueryCollection& queries, const Vocabulary& vocab,
                   std::size_t max_query_len, std::size_t k, double positional_scale) {
  std::vector<std::vector<ScoredDoc>> ranked(queries.size());
  parallel_for(queries.size(), [&](std::size_t i) {
    const Query& q = queries.queries[i];
    TokenizedText tokens = tokenize(q.text, vocab, max_query_len);
    ranked[i] = dense_search(index, encode(params, tokens, positional_scale), k);
  });
  RunResult run;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    run.by_query[queries.queries[i].id] = std::move(ranked[i]);
  }
  return run;
}

std::vector<RobustnessRow> robustness_sweep(const EncoderParams& params,
                                            const QueryCollection& queries,
                                            const DenseIndex& index, const QRelSet& qrels,
                                            const std::vector<double>& proportions,
                                            const Rng& rng_root, const Vocabulary& vocab,
                                            std::size_t max_query_len, double positional_scale) {
  for (double p : proportions) {
    check(p >= 0.0 && p <= 1.0, Errc::invalid, "robustness_sweep: proportion outside [0,1]");
  }
  std::vector<RobustnessRow> rows;
  for (std::size_t pi = 0; pi < proportions.size(); ++pi) {
    const double p = proportions[pi];
    Rng rng = rng_root.child("proportion-" + std::to_string(pi));
    RunResult run;
    for (const Query& q : queries.queries) {
      TokenizedText tokens = tokenize(q.text, vocab, max_query_len);
      const auto n_shuffle =
          static_cast<std::size_t>(std::ceil(p * static_cast<double>(tokens.size())));
      if (n_shuffle > 1) {
        auto positions = rng.sample_indices(tokens.size(), n_shuffle);
        for (std::size_t i = positions.size(); i > 1; --i) {
          std::size_t j = static_cast<std::size_t>(rng.below(i));
          std::swap(tokens[positions[i - 1]], tokens[positions[j]]);
        }
      }
      run.by_query[q.id] = dense_search(index, encode(params, tokens, positional_scale), 10);
    }
    rows.push_back(RobustnessRow{p, mrr_at_k(run, qrels, 10)});
  }
  return rows;
}

void write_robustness_csv(const std::vector<RobustnessRow>& rows, const std::string& path) {
  auto out = open_out(path);
  out << "proportion,mrr_at_10\n";
  for (const auto& r : rows) {
    out << format_double(r.proportion, 9) << ',' << format_double(r.mrr_at_10, 9) << '\n';
  }
  check(out.good(), Errc::io, "write failed: " + path);
}

}  // namespace nstr
