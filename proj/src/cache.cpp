#include "pcib/cache.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "pcib/rng.hpp"

namespace pcib::app {

namespace {

using nlohmann::json;

json signals_to_json(const SignalVector& v) {
    return {{"uptake", v.uptake},
            {"stress", v.stress},
            {"conflict", v.conflict},
            {"rationalization", v.rationalization},
            {"esi_harm", v.esi_harm},
            {"esi_geo", v.esi_geo},
            {"entity_uptake", v.entity_uptake},
            {"context_adherence", v.context_adherence},
            {"falsifiability", v.falsifiability}};
}

SignalVector signals_from_json(const json& j, bool* has_improved) {
    SignalVector v;
    v.uptake = j.at("uptake").get<double>();
    v.stress = j.at("stress").get<double>();
    v.conflict = j.at("conflict").get<double>();
    v.rationalization = j.at("rationalization").get<double>();
    v.esi_harm = j.at("esi_harm").get<double>();
    v.esi_geo = j.at("esi_geo").get<double>();
    bool improved = j.contains("entity_uptake") && j.contains("context_adherence") &&
                    j.contains("falsifiability");
    if (improved) {
        v.entity_uptake = j.at("entity_uptake").get<double>();
        v.context_adherence = j.at("context_adherence").get<double>();
        v.falsifiability = j.at("falsifiability").get<double>();
    }
    if (has_improved) *has_improved = improved;
    return v;
}

}  // namespace

std::string content_hash(const QcaTriple& triple, const std::string& config_digest,
                         const std::string& model_name) {
    std::uint64_t h = fnv1a64(triple.question);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(triple.context, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(triple.answer, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(config_digest, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(model_name, h);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string SignalCacheRecord::to_jsonl() const {
    json j;
    j["id"] = id;
    j["content_hash"] = content_hash;
    j["question"] = question;
    j["context"] = context;
    j["answer"] = answer;
    j["config_digest"] = config_digest;
    j["model_name"] = model_name;
    j["signals"] = signals_to_json(signals);
    j["timestamp"] = timestamp;
    return j.dump();
}

SignalCache SignalCache::load(const std::string& path, long* corrupted_lines) {
    SignalCache cache;
    if (corrupted_lines) *corrupted_lines = 0;
    std::ifstream in(path);
    if (!in) return cache;  // absent cache is an empty cache

    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            json j = json::parse(line);
            SignalCacheRecord rec;
            rec.id = j.at("id").get<std::string>();
            rec.content_hash = j.at("content_hash").get<std::string>();
            rec.question = j.at("question").get<std::string>();
            rec.context = j.at("context").get<std::string>();
            rec.answer = j.at("answer").get<std::string>();
            rec.config_digest = j.at("config_digest").get<std::string>();
            rec.model_name = j.at("model_name").get<std::string>();
            rec.signals = signals_from_json(j.at("signals"), &rec.has_improved_fields);
            rec.timestamp = j.value("timestamp", "");
            cache.add(std::move(rec));
        } catch (const std::exception& e) {
            if (corrupted_lines) ++(*corrupted_lines);
            std::cerr << "warning: skipping corrupted cache line " << lineno << " in "
                      << path << ": " << e.what() << "\n";
        }
    }
    return cache;
}

void SignalCache::add(SignalCacheRecord record) {
    std::size_t idx = records_.size();
    by_hash_[record.content_hash] = idx;
    by_id_[record.id] = idx;
    records_.push_back(std::move(record));
}

const SignalCacheRecord* SignalCache::find(const QcaTriple& triple,
                                           const std::string& config_digest,
                                           const std::string& model_name) const {
    auto it = by_hash_.find(content_hash(triple, config_digest, model_name));
    if (it == by_hash_.end()) return nullptr;
    const SignalCacheRecord& rec = records_[it->second];
    // hash collisions count as hits only on full-field equality
    if (rec.question != triple.question || rec.context != triple.context ||
        rec.answer != triple.answer || rec.config_digest != config_digest ||
        rec.model_name != model_name) {
        return nullptr;
    }
    return &rec;
}

const SignalCacheRecord* SignalCache::find_by_id(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &records_[it->second];
}

void append_record(const std::string& path, const SignalCacheRecord& record) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw IngestionError("cannot open cache file for append: " + path);
    out << record.to_jsonl() << '\n';
}

std::string record_timestamp(bool deterministic) {
    if (const char* env = std::getenv("PCIB_TIMESTAMP"); env && *env) return env;
    if (deterministic) return "1970-01-01T00:00:00Z";
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace pcib::app
