#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace meaeq {

// Little-endian cursor over a binary artifact. Throws Format on truncation.
class ByteReader {
public:
    explicit ByteReader(std::string_view data) : data_(data) {}

    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    std::string_view bytes(std::size_t n);
    bool done() const noexcept { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const;

    std::string_view data_;
    std::size_t pos_ = 0;
};

class ByteWriter {
public:
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f32(float v);
    void bytes(std::string_view b);

    const std::string& str() const noexcept { return buf_; }

private:
    std::string buf_;
};

struct HttpResult {
    bool ok = false;
    int status = 0;
    int attempts = 0;
    std::string body;
    std::string error;
};

// POSTs a JSON body, retrying connection failures and 5xx responses with
// exponential backoff. 4xx responses are returned without retrying.
HttpResult post_json_with_retry(const std::string& base_url, const std::string& endpoint,
                                const std::string& body, std::chrono::milliseconds timeout,
                                int retries, std::chrono::milliseconds backoff);

} // namespace meaeq
