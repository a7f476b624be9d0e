#pragma once

#include "meaeq/corpus.hpp"

#include <string_view>
#include <vector>

namespace meaeq {

enum class PoolStage { Original, Filtered, Reduced };

std::string_view to_string(PoolStage stage) noexcept;

/// Ordered, duplicate-free list of sentence ids at one pipeline stage
/// (original -> filtered -> reduced).
class QueryPool {
public:
    QueryPool() = default;
    QueryPool(std::vector<SentenceId> ids, PoolStage stage);

    static QueryPool all_of(const CorpusStore& store);

    const std::vector<SentenceId>& ids() const noexcept { return ids_; }
    PoolStage stage() const noexcept { return stage_; }
    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }

    // Same ids at a later stage; moving backwards is an error.
    QueryPool advanced(std::vector<SentenceId> ids, PoolStage next) const;

    // Throws NotFound if an id does not resolve in `store`.
    std::vector<Sentence> resolve(const CorpusStore& store) const;

    bool operator==(const QueryPool&) const = default;

private:
    std::vector<SentenceId> ids_;
    PoolStage stage_ = PoolStage::Original;
};

} // namespace meaeq
