#pragma once

#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "modelyap/cipher.hpp"

namespace modelyap {

class KatParseError : public std::runtime_error {
 public:
  KatParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct KatRecord {
  std::size_t line = 0;
  CipherSpec spec;
  Key key;
  BitBlock plaintext;
  BitBlock ciphertext;
};

struct KatFailure {
  std::size_t line = 0;
  std::string cipher;
  std::string expected_hex;
  std::string actual_hex;
};

struct KatReport {
  std::size_t vectors = 0;
  std::vector<KatFailure> failures;
  bool ok() const noexcept { return failures.empty(); }
};

// Format: cipher_id,rounds,key_hex,plaintext_hex,ciphertext_hex
// Blank lines and lines starting with '#' are skipped.
inline std::vector<KatRecord> parse_kat(std::istream& in) {
  std::vector<KatRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 5) {
      throw KatParseError(lineno, "expected 5 comma-separated fields, got " +
                                      std::to_string(fields.size()));
    }
    try {
      KatRecord rec;
      rec.line = lineno;
      std::size_t used = 0;
      const unsigned long rounds = std::stoul(fields[1], &used);
      if (used != fields[1].size() || rounds == 0) throw std::invalid_argument("bad rounds");
      rec.spec = cipher_spec(fields[0], static_cast<unsigned>(rounds));
      rec.key = Key::from_hex(rec.spec.key_bits, fields[2]);
      rec.plaintext = BitBlock::from_hex(rec.spec.block_bits, fields[3]);
      rec.ciphertext = BitBlock::from_hex(rec.spec.block_bits, fields[4]);
      out.push_back(std::move(rec));
    } catch (const std::exception& e) {
      throw KatParseError(lineno, e.what());
    }
  }
  return out;
}

/// Checks encryption and decryption of every record.
inline KatReport verify_kat(const std::vector<KatRecord>& records) {
  KatReport report;
  for (const auto& rec : records) {
    ++report.vectors;
    const BlockCipher cipher(rec.spec, rec.key);
    const BitBlock ct = cipher.encrypt(rec.plaintext);
    if (ct != rec.ciphertext) {
      report.failures.push_back({rec.line, cipher_name(rec.spec.id), rec.ciphertext.to_hex(),
                                 ct.to_hex()});
    } else if (cipher.decrypt(ct) != rec.plaintext) {
      report.failures.push_back({rec.line, cipher_name(rec.spec.id) + " (decrypt)",
                                 rec.plaintext.to_hex(), cipher.decrypt(ct).to_hex()});
    }
  }
  return report;
}

}  // namespace modelyap
