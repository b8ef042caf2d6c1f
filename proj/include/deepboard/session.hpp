#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "deepboard/backend.hpp"
#include "deepboard/wire.hpp"

namespace deepboard {

/// Counters shared by all sessions of a server; read by the metrics reporter.
struct ServiceCounters {
    std::atomic<std::uint64_t> sessions{0};
    std::atomic<std::uint64_t> frames{0};
    std::atomic<std::uint64_t> drops{0};
    std::atomic<std::uint64_t> render_us{0};
    std::atomic<std::uint64_t> errors{0};
};

struct SessionStats {
    std::uint64_t submitted = 0;   // accepted into the mailbox
    std::uint64_t dropped = 0;     // rejected: seq not newer than the last one seen
    std::uint64_t superseded = 0;  // replaced in the mailbox before rendering began
    std::uint64_t frames = 0;
    std::uint64_t errors = 0;      // render failures (e.g. observer at the object center)
};

/// One client's pose -> frame loop. A single worker renders from a mailbox of
/// capacity one: a newer pose replaces an unrendered older one, so the worker
/// always starts on the newest pose. Frames go to `sink` on the worker thread.
class RenderSession {
public:
    using FrameSink = std::function<void(FrameResponse)>;

    RenderSession(std::shared_ptr<const BillboardBackend> backend, std::uint32_t object_id,
                  FrameSink sink, size_t png_threshold = kDefaultPngThreshold,
                  ServiceCounters* counters = nullptr);
    ~RenderSession();

    RenderSession(const RenderSession&) = delete;
    RenderSession& operator=(const RenderSession&) = delete;

    /// Returns false when the request is dropped as stale (seq not increasing) or
    /// addressed to another object. Throws SessionClosed after close().
    bool submit(const PoseRequest& request);

    /// Blocks until the mailbox is empty and the worker is idle.
    void drain();

    /// Stops the worker after its current frame; an unrendered pose is discarded.
    /// Safe to call from several threads and more than once.
    void close();

    SessionStats stats() const;
    std::uint32_t object_id() const { return object_id_; }

private:
    void run();

    std::shared_ptr<const BillboardBackend> backend_;
    std::uint32_t object_id_;
    FrameSink sink_;
    size_t png_threshold_;
    ServiceCounters* counters_;

    mutable std::mutex mu_;
    std::mutex join_mu_;
    std::condition_variable wake_;
    std::condition_variable idle_;
    std::optional<PoseRequest> mailbox_;
    std::optional<std::uint64_t> last_seq_;
    bool busy_ = false;
    bool closed_ = false;
    SessionStats stats_;
    std::thread worker_;
};

}  // namespace deepboard
