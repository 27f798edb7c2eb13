#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include "yamabe/cli.hpp"

namespace yamabe::cli {

CorrectorStore::CorrectorStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    const auto lock_path = dir_ / "store.lock";
    lock_fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (lock_fd_ < 0) {
        throw std::runtime_error("cannot open lock file " + lock_path.string() + ": " + std::strerror(errno));
    }
    // Blocks until any other run using the same store has finished.
    while (::flock(lock_fd_, LOCK_EX) != 0) {
        if (errno == EINTR) continue;
        const int err = errno;
        ::close(lock_fd_);
        throw std::runtime_error("cannot lock " + lock_path.string() + ": " + std::strerror(err));
    }
}

CorrectorStore::~CorrectorStore() {
    if (lock_fd_ >= 0) {
        ::flock(lock_fd_, LOCK_UN);
        ::close(lock_fd_);
    }
}

CorrectorStore::Entry CorrectorStore::get(const CurvatureData& curv, const RadialGrid& grid, double tol) {
    const std::string key = corrector_cache::key(curv, grid, tol);
    const auto path = dir_ / (key + ".bin");
    CorrectorSolution cached(grid);
    if (corrector_cache::load(path.string(), key, cached)) return Entry{std::move(cached), true, key};

    CorrectorSolution fresh = solve_corrector(curv, grid, tol);
    // Save to a temporary name first so an interrupted run never leaves a torn entry.
    auto tmp = path;
    tmp += ".tmp";
    corrector_cache::save(tmp.string(), key, fresh);
    std::filesystem::rename(tmp, path);
    return Entry{std::move(fresh), false, key};
}

RadialGrid make_grid(const StudyConfig& cfg) {
    return RadialGrid::standard(cfg.grid_cells, cfg.grid_extent, cfg.grid_ratio);
}

}  // namespace yamabe::cli
