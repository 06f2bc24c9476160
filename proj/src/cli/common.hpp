#pragma once

#include "json.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tcpshare::cli::detail {

inline unsigned resolve_jobs(unsigned jobs)
{
    if (jobs != 0) return jobs;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(0..n-1) on up to `jobs` threads; results keep index order.
template <typename T>
std::vector<T> parallel_map(unsigned jobs, std::size_t n, const std::function<T(std::size_t)>& fn)
{
    std::vector<T> results(n);
    jobs = resolve_jobs(jobs);
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) results[i] = fn(i);
        return results;
    }
    std::size_t next = 0;
    std::vector<std::future<void>> running;
    std::mutex m;
    auto worker = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard lock(m);
                if (next >= n) return;
                i = next++;
            }
            results[i] = fn(i);
        }
    };
    for (unsigned j = 0; j < std::min<std::size_t>(jobs, n); ++j) running.push_back(std::async(std::launch::async, worker));
    for (auto& f : running) f.get();
    return results;
}

inline void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::filesystem::filesystem_error("cannot open for writing", path, std::make_error_code(std::errc::io_error));
    out << content;
    if (!out) throw std::filesystem::filesystem_error("write failed", path, std::make_error_code(std::errc::io_error));
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j)
{
    write_file(path, j.dump(2) + "\n");
}

inline double mbps(double bps)
{
    return bps / 1e6;
}

} // namespace tcpshare::cli::detail
