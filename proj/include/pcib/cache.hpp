#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pcib/core.hpp"
#include "pcib/signals.hpp"

namespace pcib::app {

/// One extracted-signal cache entry. The content hash covers
/// (question, context, answer, config digest, model name); the hashed
/// fields are stored alongside so a hash hit is honored only on
/// full-field equality.
struct SignalCacheRecord {
    std::string id;
    std::string content_hash;
    std::string question;
    std::string context;
    std::string answer;
    std::string config_digest;
    std::string model_name;
    SignalVector signals;
    bool has_improved_fields = true;
    std::string timestamp;

    std::string to_jsonl() const;
};

std::string content_hash(const QcaTriple& triple, const std::string& config_digest,
                         const std::string& model_name);

/// Append-only JSONL cache. Corrupted lines are skipped with a warning
/// (counted in `corrupted_lines`), never fatal.
class SignalCache {
public:
    SignalCache() = default;

    static SignalCache load(const std::string& path, long* corrupted_lines = nullptr);

    void add(SignalCacheRecord record);
    /// Hit requires hash match plus equality of every hashed field.
    const SignalCacheRecord* find(const QcaTriple& triple,
                                  const std::string& config_digest,
                                  const std::string& model_name) const;
    const SignalCacheRecord* find_by_id(const std::string& id) const;
    std::size_t size() const { return records_.size(); }
    const std::vector<SignalCacheRecord>& records() const { return records_; }

private:
    std::vector<SignalCacheRecord> records_;
    std::unordered_map<std::string, std::size_t> by_hash_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

void append_record(const std::string& path, const SignalCacheRecord& record);

/// UTC timestamp used for new cache records: PCIB_TIMESTAMP when set,
/// the fixed epoch for deterministic mock runs, wall clock otherwise.
std::string record_timestamp(bool deterministic);

}  // namespace pcib::app
