#include "meaeq/wire.hpp"

#include "meaeq/error.hpp"

#include "httplib.h"

#include <bit>
#include <thread>

namespace meaeq {

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

std::string_view ByteReader::bytes(std::size_t n) {
    need(n);
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
}

void ByteReader::need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail(ErrorCode::Format, "truncated binary record");
}

void ByteWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void ByteWriter::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::bytes(std::string_view b) { buf_.append(b); }

HttpResult post_json_with_retry(const std::string& base_url, const std::string& endpoint,
                                const std::string& body, std::chrono::milliseconds timeout,
                                int retries, std::chrono::milliseconds backoff) {
    HttpResult result;
    httplib::Client client(base_url);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    auto delay = backoff;
    for (int attempt = 0; attempt <= retries; ++attempt) {
        result.attempts = attempt + 1;
        auto res = client.Post(endpoint, body, "application/json");
        if (res) {
            result.status = res->status;
            if (res->status >= 200 && res->status < 300) {
                result.ok = true;
                result.body = res->body;
                return result;
            }
            result.error = base_url + endpoint + " returned HTTP " + std::to_string(res->status) +
                           ": " + res->body;
            if (res->status < 500) return result;
        } else {
            result.error = base_url + endpoint + ": " + httplib::to_string(res.error());
        }
        if (attempt < retries) {
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
    }
    result.error += " (after " + std::to_string(retries) + " retries)";
    return result;
}

} // namespace meaeq
