#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace opttree {

// Seeded English-like text: words drawn from a fixed lexicon through a sparse
// word-level Markov chain, with sentence punctuation and line breaks. Gives the
// byte-level n-gram models something with real structure to learn.
std::string synthetic_corpus(std::uint64_t seed, std::size_t bytes);

// Throws std::invalid_argument when the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

// Non-empty lines of a prompts file (trailing '\r' stripped).
std::vector<std::string> read_lines(const std::filesystem::path& path);

// `count` snippets of `length` bytes cut from `text` at seeded offsets,
// starting at word boundaries where possible.
std::vector<std::string> sample_prompts(const std::string& text,
                                        std::size_t count, std::size_t length,
                                        std::uint64_t seed);

}  // namespace opttree
