// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

// Raw file bytes -> symbolic token sequences -> fixed-length chunks.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace scriptnet::prep {

using Token = std::uint16_t;

// Byte values map to ids 0..255; one extra id pads sequences.
inline constexpr std::size_t kVocabSize = 257;
inline constexpr Token kPadToken = 256;

struct TokenSequence {
  std::vector<Token> tokens;
  std::size_t original_length = 0;
};

// Tokens laid out [batch, num_chunks, chunk_len], row-major.
struct ChunkedBatch {
  std::size_t batch = 0;
  std::size_t num_chunks = 0;
  std::size_t chunk_len = 0;
  std::vector<Token> tokens;
  // Byte count of each item before truncation.
  std::vector<std::size_t> lengths;
  // Tokens actually kept per item after truncation.
  std::vector<std::size_t> kept;

  std::span<const Token> chunk(std::size_t item, std::size_t index) const {
    return std::span<const Token>(tokens).subspan((item * num_chunks + index) * chunk_len, chunk_len);
  }
  std::span<const Token> item_tokens(std::size_t item) const {
    return std::span<const Token>(tokens).subspan(item * num_chunks * chunk_len, num_chunks * chunk_len);
  }
};

TokenSequence encode_bytes(std::span<const std::uint8_t> raw);

// Keeps the first `max_length` tokens. Throws ConfigError for max_length < 1.
TokenSequence truncate(const TokenSequence& seq, std::size_t max_length);

// Truncates every sequence to max_length and right-pads with PAD to the
// number of chunks needed by the longest item (at least one chunk).
ChunkedBatch chunk_and_batch(std::span<const TokenSequence> seqs, std::size_t chunk_len, std::size_t max_length);

// Item tokens in chunk order with PAD removed.
std::vector<Token> flatten_and_strip(const ChunkedBatch& batch, std::size_t item);

}  // namespace scriptnet::prep
