#include "deepboard/session.hpp"

#include <chrono>

#include "deepboard/errors.hpp"

namespace deepboard {

RenderSession::RenderSession(std::shared_ptr<const BillboardBackend> backend,
                             std::uint32_t object_id, FrameSink sink, size_t png_threshold,
                             ServiceCounters* counters)
    : backend_(std::move(backend)),
      object_id_(object_id),
      sink_(std::move(sink)),
      png_threshold_(png_threshold),
      counters_(counters) {
    if (!backend_) throw InvalidArgument("session needs a backend");
    if (counters_) ++counters_->sessions;
    worker_ = std::thread([this] { run(); });
}

RenderSession::~RenderSession() { close(); }

bool RenderSession::submit(const PoseRequest& request) {
    std::lock_guard lock(mu_);
    if (closed_) throw SessionClosed("object " + std::to_string(object_id_));
    const bool stale = last_seq_ && request.seq <= *last_seq_;
    if (stale || request.object_id != object_id_) {
        ++stats_.dropped;
        if (counters_) ++counters_->drops;
        return false;
    }
    last_seq_ = request.seq;
    if (mailbox_) ++stats_.superseded;
    mailbox_ = request;
    ++stats_.submitted;
    wake_.notify_one();
    return true;
}

void RenderSession::drain() {
    std::unique_lock lock(mu_);
    idle_.wait(lock, [&] { return closed_ || (!mailbox_ && !busy_); });
}

void RenderSession::close() {
    {
        std::lock_guard lock(mu_);
        if (closed_ && !worker_.joinable()) return;
        closed_ = true;
        mailbox_.reset();
    }
    wake_.notify_all();
    idle_.notify_all();
    // close() may race with itself (owner thread and server shutdown).
    std::lock_guard join_lock(join_mu_);
    if (worker_.joinable() && worker_.get_id() != std::this_thread::get_id()) {
        worker_.join();
        if (counters_) --counters_->sessions;
    }
}

SessionStats RenderSession::stats() const {
    std::lock_guard lock(mu_);
    return stats_;
}

void RenderSession::run() {
    using Clock = std::chrono::steady_clock;
    while (true) {
        PoseRequest request;
        {
            std::unique_lock lock(mu_);
            wake_.wait(lock, [&] { return closed_ || mailbox_.has_value(); });
            if (closed_) return;
            request = *mailbox_;
            mailbox_.reset();
            busy_ = true;
        }

        std::optional<FrameResponse> frame;
        try {
            const auto start = Clock::now();
            const RenderedImage image =
                backend_->render(request.pose(), request.time_s, request.width, request.height);
            const float ms = std::chrono::duration<float, std::milli>(Clock::now() - start).count();
            frame = make_frame_response(object_id_, request.seq, image, ms, png_threshold_);
            if (counters_) {
                ++counters_->frames;
                counters_->render_us += static_cast<std::uint64_t>(ms * 1000.0f);
            }
        } catch (const Error&) {
            if (counters_) ++counters_->errors;
        }
        if (frame) sink_(std::move(*frame));

        {
            std::lock_guard lock(mu_);
            busy_ = false;
            if (frame) ++stats_.frames;
            else ++stats_.errors;
        }
        idle_.notify_all();
    }
}

}  // namespace deepboard
