#include "meaeq/pool.hpp"

#include "meaeq/error.hpp"

#include <unordered_set>

namespace meaeq {

std::string_view to_string(PoolStage stage) noexcept {
    switch (stage) {
    case PoolStage::Original: return "original";
    case PoolStage::Filtered: return "filtered";
    case PoolStage::Reduced: return "reduced";
    }
    return "unknown";
}

QueryPool::QueryPool(std::vector<SentenceId> ids, PoolStage stage) : ids_(std::move(ids)), stage_(stage) {
    std::unordered_set<SentenceId> seen;
    seen.reserve(ids_.size());
    for (auto id : ids_) {
        if (!seen.insert(id).second) {
            fail(ErrorCode::Inconsistent, "query pool contains duplicate id " + std::to_string(id));
        }
    }
}

QueryPool QueryPool::all_of(const CorpusStore& store) {
    std::vector<SentenceId> ids(store.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = store.sentences()[i].id;
    return QueryPool(std::move(ids), PoolStage::Original);
}

QueryPool QueryPool::advanced(std::vector<SentenceId> ids, PoolStage next) const {
    if (static_cast<int>(next) < static_cast<int>(stage_)) {
        fail(ErrorCode::Inconsistent, "query pool stage cannot move from " + std::string(to_string(stage_)) +
                                          " to " + std::string(to_string(next)));
    }
    return QueryPool(std::move(ids), next);
}

std::vector<Sentence> QueryPool::resolve(const CorpusStore& store) const {
    std::vector<Sentence> out;
    out.reserve(ids_.size());
    for (auto id : ids_) out.push_back(store.at(id));
    return out;
}

} // namespace meaeq
