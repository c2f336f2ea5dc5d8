// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "scriptnet/preprocessing.hpp"

#include <algorithm>
#include <string>

#include "scriptnet/errors.hpp"

namespace scriptnet::prep {

TokenSequence encode_bytes(std::span<const std::uint8_t> raw) {
  TokenSequence seq;
  seq.tokens.assign(raw.begin(), raw.end());
  seq.original_length = raw.size();
  return seq;
}

TokenSequence truncate(const TokenSequence& seq, std::size_t max_length) {
  if (max_length < 1) throw ConfigError("maximum sequence length must be at least 1");
  TokenSequence out;
  const std::size_t n = std::min(seq.tokens.size(), max_length);
  out.tokens.assign(seq.tokens.begin(), seq.tokens.begin() + static_cast<std::ptrdiff_t>(n));
  out.original_length = seq.original_length;
  return out;
}

ChunkedBatch chunk_and_batch(std::span<const TokenSequence> seqs, std::size_t chunk_len, std::size_t max_length) {
  if (seqs.empty()) throw ContractError("chunk_and_batch: empty batch");
  if (chunk_len < 1) throw ConfigError("chunk length must be at least 1");
  if (max_length < 1) throw ConfigError("maximum sequence length must be at least 1");

  ChunkedBatch out;
  out.batch = seqs.size();
  out.chunk_len = chunk_len;
  const std::size_t cap = (max_length + chunk_len - 1) / chunk_len;
  std::size_t chunks = 1;
  for (const auto& s : seqs) {
    const std::size_t n = std::min(s.tokens.size(), max_length);
    chunks = std::max(chunks, (n + chunk_len - 1) / chunk_len);
  }
  out.num_chunks = std::min(chunks, cap);

  const std::size_t stride = out.num_chunks * chunk_len;
  out.tokens.assign(out.batch * stride, kPadToken);
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    const auto& s = seqs[b];
    const std::size_t n = std::min(s.tokens.size(), max_length);
    std::copy_n(s.tokens.begin(), n, out.tokens.begin() + static_cast<std::ptrdiff_t>(b * stride));
    out.lengths.push_back(s.original_length);
    out.kept.push_back(n);
  }
  return out;
}

std::vector<Token> flatten_and_strip(const ChunkedBatch& batch, std::size_t item) {
  if (item >= batch.batch) throw IndexError("batch item " + std::to_string(item) + " out of range");
  std::vector<Token> out;
  for (Token t : batch.item_tokens(item)) {
    if (t != kPadToken) out.push_back(t);
  }
  return out;
}

}  // namespace scriptnet::prep
