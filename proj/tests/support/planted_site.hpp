#pragma once

// Local HTTP server with per-host routes, a request log and an in-flight
// counter, used to exercise the crawler offline.

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace testsupport {

class PlantedSite {
public:
    struct Entry {
        std::string host;
        std::string path;
        double start = 0.0;  // seconds since the site started
        double end = 0.0;
    };
    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    PlantedSite() : t0_(std::chrono::steady_clock::now()) {
        srv_.new_task_queue = [] { return new httplib::ThreadPool(24); };
        srv_.set_keep_alive_max_count(1);
        auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
            const int now = ++in_flight_;
            {
                std::lock_guard lock(mu_);
                max_in_flight_ = std::max(max_in_flight_, now);
            }
            Entry e{host_of(req), req.path, elapsed(), 0.0};
            Handler h;
            {
                std::lock_guard lock(mu_);
                auto it = routes_.find(e.host + e.path);
                if (it != routes_.end()) h = it->second;
            }
            if (h) {
                h(req, res);
            } else {
                res.status = 404;
                res.set_content("not found", "text/plain");
            }
            e.end = elapsed();
            --in_flight_;
            std::lock_guard lock(mu_);
            log_.push_back(std::move(e));
        };
        srv_.Get(".*", dispatch);
        port_ = srv_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { srv_.listen_after_bind(); });
        srv_.wait_until_ready();
    }

    ~PlantedSite() {
        srv_.stop();
        if (thread_.joinable()) thread_.join();
    }

    PlantedSite(const PlantedSite&) = delete;
    PlantedSite& operator=(const PlantedSite&) = delete;

    std::string address() const { return "127.0.0.1:" + std::to_string(port_); }

    void route(const std::string& host, const std::string& path, Handler h) {
        std::lock_guard lock(mu_);
        routes_[host + path] = std::move(h);
    }

    void page(const std::string& host, const std::string& path, int status, std::string content_type,
              std::string body, int delay_ms = 0) {
        route(host, path, [=](const httplib::Request&, httplib::Response& res) {
            if (delay_ms) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            res.status = status;
            res.set_content(body, content_type);
        });
    }

    void redirect(const std::string& host, const std::string& path, std::string location, int status = 301) {
        route(host, path, [=](const httplib::Request&, httplib::Response& res) {
            res.status = status;
            res.set_header("Location", location);
        });
    }

    std::vector<Entry> log() const {
        std::lock_guard lock(mu_);
        return log_;
    }

    int max_in_flight() const {
        std::lock_guard lock(mu_);
        return max_in_flight_;
    }

    std::size_t hits(const std::string& host, const std::string& path) const {
        std::lock_guard lock(mu_);
        return static_cast<std::size_t>(std::count_if(log_.begin(), log_.end(), [&](const Entry& e) {
            return e.host == host && e.path == path;
        }));
    }

    // Smallest gap between the end of one request and the start of the next
    // for the same host; a large value when a host saw a single request.
    double min_same_host_gap() const {
        std::lock_guard lock(mu_);
        std::map<std::string, std::vector<Entry>> by_host;
        for (const auto& e : log_) by_host[e.host].push_back(e);
        double gap = 1e9;
        for (auto& [h, v] : by_host) {
            std::sort(v.begin(), v.end(), [](const Entry& a, const Entry& b) { return a.start < b.start; });
            for (std::size_t i = 1; i < v.size(); ++i) gap = std::min(gap, v[i].start - v[i - 1].end);
        }
        return gap;
    }

    // Same, measured start to start.
    double min_same_host_start_gap() const {
        std::lock_guard lock(mu_);
        std::map<std::string, std::vector<double>> by_host;
        for (const auto& e : log_) by_host[e.host].push_back(e.start);
        double gap = 1e9;
        for (auto& [h, v] : by_host) {
            std::sort(v.begin(), v.end());
            for (std::size_t i = 1; i < v.size(); ++i) gap = std::min(gap, v[i] - v[i - 1]);
        }
        return gap;
    }

private:
    static std::string host_of(const httplib::Request& req) {
        auto h = req.get_header_value("Host");
        if (auto colon = h.rfind(':'); colon != std::string::npos && h.find(']') == std::string::npos)
            h.erase(colon);
        return h;
    }
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

    httplib::Server srv_;
    std::thread thread_;
    int port_ = 0;
    std::chrono::steady_clock::time_point t0_;
    mutable std::mutex mu_;
    std::map<std::string, Handler> routes_;
    std::vector<Entry> log_;
    std::atomic<int> in_flight_{0};
    int max_in_flight_ = 0;
};

}  // namespace testsupport
