#include "copnet/closing.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>

#include <csignal>
#include <sys/wait.h>
#include <unistd.h>

#include "copnet/copf_io.hpp"

namespace copnet {

void ClosingConfig::validate() const {
    if (!(eps_conv > 0.0 && eps_conv < 1.0))
        throw std::invalid_argument("ClosingConfig: eps_conv must lie in (0, 1)");
    if (max_iters < 1) throw std::invalid_argument("ClosingConfig: max_iters must be >= 1");
    if (!(theta > 0.0 && theta < 1.0))
        throw std::invalid_argument("ClosingConfig: theta must lie in (0, 1)");
}

namespace {

std::vector<std::pair<int, int>> disk_offsets(int radius_px) {
    const double limit = (radius_px + 0.5) * (radius_px + 0.5);
    std::vector<std::pair<int, int>> offsets;
    for (int dy = -radius_px; dy <= radius_px; ++dy)
        for (int dx = -radius_px; dx <= radius_px; ++dx)
            if (dx * dx + dy * dy <= limit) offsets.emplace_back(dx, dy);
    return offsets;
}

enum class Extremum { maximum, minimum };

// Out-of-image neighbors are ignored, restricting the filter to the domain.
Field2D disk_filter(const Field2D& f, const std::vector<std::pair<int, int>>& offsets,
                    Extremum kind) {
    Field2D out(f.width, f.height, f.spacing, 0.0, f.role);
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            double best = f.at(x, y);
            for (const auto& [dx, dy] : offsets) {
                const int nx = x + dx;
                const int ny = y + dy;
                if (nx < 0 || nx >= f.width || ny < 0 || ny >= f.height) continue;
                const double v = f.at(nx, ny);
                best = kind == Extremum::maximum ? std::max(best, v) : std::min(best, v);
            }
            out.at(x, y) = best;
        }
    }
    return out;
}

}  // namespace

Field2D close_morphological(const Field2D& field, int radius_px) {
    if (radius_px < 1) throw std::invalid_argument("close_morphological: radius must be >= 1");
    const auto offsets = disk_offsets(radius_px);
    return disk_filter(disk_filter(field, offsets, Extremum::maximum), offsets,
                       Extremum::minimum);
}

namespace {

std::vector<std::string> split_command(const std::string& command) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : command) {
        if (c == ' ' || c == '\t') {
            if (!cur.empty()) parts.push_back(std::move(cur)), cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) parts.push_back(std::move(cur));
    return parts;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static std::atomic<std::uint64_t> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("copnet-backend-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

// Runs argv with stdout/stderr inherited; kills the child on timeout.
void run_process(const std::vector<std::string>& argv, double timeout_s) {
    std::vector<char*> raw;
    raw.reserve(argv.size() + 1);
    for (const std::string& a : argv) raw.push_back(const_cast<char*>(a.c_str()));
    raw.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid < 0) throw std::runtime_error("external backend: fork failed");
    if (pid == 0) {
        ::execvp(raw[0], raw.data());
        ::_exit(127);
    }

    const auto deadline_us = std::int64_t(timeout_s * 1e6);
    std::int64_t waited_us = 0;
    for (;;) {
        int status = 0;
        const pid_t done = ::waitpid(pid, &status, WNOHANG);
        if (done == pid) {
            if (WIFEXITED(status) && WEXITSTATUS(status) == 0) return;
            if (WIFEXITED(status))
                throw std::runtime_error("external backend '" + argv[0] + "' exited with code " +
                                         std::to_string(WEXITSTATUS(status)));
            throw std::runtime_error("external backend '" + argv[0] + "' terminated by signal");
        }
        if (done < 0) throw std::runtime_error("external backend: waitpid failed");
        if (waited_us >= deadline_us) {
            ::kill(pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            throw std::runtime_error("external backend '" + argv[0] + "' timed out after " +
                                     std::to_string(timeout_s) + " s");
        }
        ::usleep(2000);
        waited_us += 2000;
    }
}

Field2D run_external(const ExternalBackend& backend, const Field2D& field) {
    std::vector<std::string> argv = split_command(backend.command);
    if (argv.empty()) throw std::invalid_argument("external backend: empty command");

    TempDir dir;
    const auto in_path = dir.path / "in.copf";
    const auto out_path = dir.path / "out.copf";
    write_copf(field, in_path);
    argv.push_back(in_path.string());
    argv.push_back(out_path.string());
    run_process(argv, backend.timeout_s);

    Field2D result = read_copf(out_path);
    check_same_dims(result, field, "external backend output");
    return result;
}

}  // namespace

Field2D run_backend(const ClosingBackend& backend, const Field2D& field) {
    Field2D out = std::visit(
        [&](const auto& b) -> Field2D {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, IdentityBackend>) {
                return field;
            } else if constexpr (std::is_same_v<T, MorphologicalBackend>) {
                return close_morphological(field, b.radius_px);
            } else if constexpr (std::is_same_v<T, ExternalBackend>) {
                return run_external(b, field);
            } else {
                if (!b.fn) throw std::invalid_argument("function backend: empty callable");
                Field2D r = b.fn(field);
                check_same_dims(r, field, "function backend output");
                return r;
            }
        },
        backend);
    return clamp01(std::move(out));
}

double modified_fraction(const Field2D& u_prev, const Field2D& u_next, double theta) {
    check_same_dims(u_prev, u_next, "modified_fraction");
    std::size_t changed = 0;
    for (std::size_t i = 0; i < u_prev.values.size(); ++i) {
        const bool a = u_prev.values[i] >= theta;
        const bool b = u_next.values[i] >= theta;
        if (a != b) ++changed;
    }
    return double(changed) / double(u_prev.values.size());
}

ClosingRun iterate_closing(const Field2D& u0, const ClosingConfig& config,
                           const std::function<void(int, const Field2D&)>& on_iteration) {
    config.validate();
    validate_probability(u0, "iterate_closing");

    ClosingRun run;
    Field2D current = u0;
    for (int k = 0; k < config.max_iters; ++k) {
        Field2D next = run_backend(config.backend, current);
        const double frac = modified_fraction(current, next, config.theta);
        run.history.push_back(frac);
        current = std::move(next);
        if (on_iteration) on_iteration(k, current);
        if (frac < config.eps_conv) {
            run.converged = true;
            break;
        }
    }
    run.iterations = int(run.history.size());
    run.final_map = std::move(current);
    return run;
}

}  // namespace copnet
