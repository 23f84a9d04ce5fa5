#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "csvddnet/errors.hpp"

namespace csvddnet {

struct RetrievalIndex {
  Eigen::MatrixXd descriptors;   // n x D'
  std::vector<std::string> ids;  // unique, one per row

  int n() const { return static_cast<int>(descriptors.rows()); }
  int dim() const { return static_cast<int>(descriptors.cols()); }
};

inline RetrievalIndex build_index(Eigen::MatrixXd descriptors, std::vector<std::string> ids) {
  if (descriptors.rows() != static_cast<Eigen::Index>(ids.size()))
    throw DimensionMismatch("build_index: " + std::to_string(descriptors.rows()) + " rows vs " +
                            std::to_string(ids.size()) + " ids");
  if (!descriptors.allFinite()) throw Error("build_index: non-finite descriptor values");
  std::set<std::string> seen;
  for (const std::string& id : ids)
    if (!seen.insert(id).second) throw Error("build_index: duplicate id '" + id + "'");
  return RetrievalIndex{std::move(descriptors), std::move(ids)};
}

struct SearchHit {
  std::string id;
  double distance = 0.0;
};

// Exact linear scan, ascending distance, ties by id ascending.
inline std::vector<SearchHit> search(const RetrievalIndex& index, const Eigen::VectorXd& query,
                                     int topk) {
  if (query.size() != index.dim())
    throw DimensionMismatch("search: query dim " + std::to_string(query.size()) + " vs index dim " +
                            std::to_string(index.dim()));
  std::vector<SearchHit> hits(index.n());
  for (int i = 0; i < index.n(); ++i) {
    hits[i].id = index.ids[i];
    hits[i].distance = (index.descriptors.row(i).transpose() - query).norm();
  }
  std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
  });
  if (topk >= 0 && topk < static_cast<int>(hits.size())) hits.resize(topk);
  return hits;
}

// query id -> set of relevant ids, all sets non-empty
using GroundTruth = std::map<std::string, std::set<std::string>>;

// Line format: query_id<TAB>relevant_id[,relevant_id...]. Blank lines and
// lines starting with '#' are skipped.
inline GroundTruth read_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingTruth("cannot open ground truth file " + path);
  GroundTruth truth;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw MissingTruth(path + ":" + std::to_string(lineno) + ": expected query<TAB>relevant");
    const std::string query = line.substr(0, tab);
    if (truth.count(query))
      throw MissingTruth(path + ":" + std::to_string(lineno) + ": duplicate query '" + query + "'");
    std::set<std::string> relevant;
    std::stringstream rest(line.substr(tab + 1));
    std::string token;
    while (std::getline(rest, token, ','))
      if (!token.empty()) relevant.insert(token);
    if (relevant.empty())
      throw MissingTruth(path + ":" + std::to_string(lineno) + ": empty relevant set for '" +
                         query + "'");
    truth[query] = std::move(relevant);
  }
  return truth;
}

// AP of one ranked list: mean over the relevant set of precision at the
// rank where each relevant item appears; items never retrieved contribute
// 0. The query's own id is dropped from the ranking first.
inline double average_precision(const std::string& query_id, const std::vector<std::string>& ranking,
                                const std::set<std::string>& relevant) {
  if (relevant.empty()) throw MissingTruth("average_precision: empty relevant set");
  double sum = 0.0;
  int rank = 0;
  int hits = 0;
  for (const std::string& id : ranking) {
    if (id == query_id) continue;
    ++rank;
    if (relevant.count(id)) {
      ++hits;
      sum += static_cast<double>(hits) / rank;
    }
  }
  return sum / static_cast<double>(relevant.size());
}

// rankings: per query, (query id, ranked ids best first)
inline double mean_average_precision(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& rankings,
    const GroundTruth& truth) {
  if (rankings.empty()) throw MissingTruth("mean_average_precision: no queries");
  double sum = 0.0;
  for (const auto& [query, ranking] : rankings) {
    const auto it = truth.find(query);
    if (it == truth.end())
      throw MissingTruth("mean_average_precision: no ground truth for query '" + query + "'");
    sum += average_precision(query, ranking, it->second);
  }
  return sum / static_cast<double>(rankings.size());
}

// Full protocol over one index: every query in the ground truth is looked
// up by id, ranked against all other items, and scored.
inline double evaluate_map(const RetrievalIndex& index, const GroundTruth& truth) {
  std::map<std::string, int> row_of;
  for (int i = 0; i < index.n(); ++i) row_of[index.ids[i]] = i;

  std::vector<std::pair<std::string, std::vector<std::string>>> rankings;
  rankings.reserve(truth.size());
  for (const auto& [query, relevant] : truth) {
    (void)relevant;
    const auto it = row_of.find(query);
    if (it == row_of.end())
      throw MissingTruth("evaluate_map: query '" + query + "' not in index");
    const std::vector<SearchHit> hits =
        search(index, index.descriptors.row(it->second).transpose(), -1);
    std::vector<std::string> ranking;
    ranking.reserve(hits.size());
    for (const SearchHit& h : hits) ranking.push_back(h.id);
    rankings.emplace_back(query, std::move(ranking));
  }
  return mean_average_precision(rankings, truth);
}

}  // namespace csvddnet
