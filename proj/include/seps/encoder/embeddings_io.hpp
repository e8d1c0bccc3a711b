#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "seps/csv.hpp"
#include "seps/nn/distributions.hpp"

namespace seps::encoder {

inline constexpr int kEmbeddingsFormatVersion = 1;

struct EmbeddingTable {
  std::vector<std::size_t> agent_ids;
  std::vector<nn::DiagonalGaussian> embeddings;
  std::vector<int> ground_truth_types;

  std::vector<std::vector<double>> means() const {
    std::vector<std::vector<double>> out;
    for (const auto& g : embeddings) out.push_back(g.mean);
    return out;
  }
};

/// "# seps-embeddings format=1 config=<hash>", a column header, then
/// agent_id, mean_1..mean_m, logvar_1..logvar_m, ground_truth_type.
inline void write_embeddings_csv(std::ostream& out, std::span<const nn::DiagonalGaussian> emb,
                                 std::span<const int> types, const std::string& config_hash) {
  if (emb.size() != types.size()) throw DimensionError("write_embeddings_csv: one type per agent required");
  const std::size_t m = emb.empty() ? 0 : emb.front().dim();
  out << "# seps-embeddings format=" << kEmbeddingsFormatVersion << " config=" << config_hash << '\n';
  out << "agent_id";
  for (std::size_t d = 1; d <= m; ++d) out << ",mean_" << d;
  for (std::size_t d = 1; d <= m; ++d) out << ",logvar_" << d;
  out << ",ground_truth_type\n";
  for (std::size_t i = 0; i < emb.size(); ++i) {
    out << i;
    for (double v : emb[i].mean) out << ',' << csv::format(v);
    for (double v : emb[i].log_variance) out << ',' << csv::format(v);
    out << ',' << types[i] << '\n';
  }
}

inline EmbeddingTable read_embeddings_csv(std::istream& in) {
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0, m = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = csv::trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto fields = csv::split(view);
    if (!have_header) {
      if (fields.size() < 4 || (fields.size() - 2) % 2 != 0 || csv::trim(fields.front()) != "agent_id")
        throw ParseError("embeddings: bad column header", line_no);
      m = (fields.size() - 2) / 2;
      have_header = true;
      continue;
    }
    if (fields.size() != 2 * m + 2)
      throw ParseError("embeddings: expected " + std::to_string(2 * m + 2) + " columns, got " +
                           std::to_string(fields.size()),
                       line_no);
    const long long id = csv::parse_int(fields[0], line_no);
    if (id != static_cast<long long>(table.agent_ids.size()))
      throw ParseError("embeddings: agent ids must be 0..N-1 in order", line_no);
    std::vector<double> mean(m), lv(m);
    for (std::size_t d = 0; d < m; ++d) {
      mean[d] = csv::parse_double(fields[1 + d], line_no);
      lv[d] = csv::parse_double(fields[1 + m + d], line_no);
    }
    table.agent_ids.push_back(static_cast<std::size_t>(id));
    table.embeddings.emplace_back(std::move(mean), std::move(lv));
    table.ground_truth_types.push_back(static_cast<int>(csv::parse_int(fields[2 * m + 1], line_no)));
  }
  if (!have_header) throw ParseError("embeddings: missing column header", line_no);
  if (table.agent_ids.empty()) throw ParseError("embeddings: no rows", line_no);
  return table;
}

}  // namespace seps::encoder
