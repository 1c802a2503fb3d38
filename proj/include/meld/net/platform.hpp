#pragma once

#include "meld/proto/messages.hpp"

#include <functional>
#include <random>

namespace meld::net {

// What protocol participants need from their host: a clock, timers, frame
// transport, and randomness. The discrete-event simulator is the primary
// implementation; participants must never consult the wall clock directly.
class Platform {
public:
    virtual ~Platform() = default;

    virtual double now() = 0;
    virtual void schedule(double delay_s, std::function<void()> fn) = 0;

    // Sends a request frame; the callback fires once per delivered response
    // and may never fire at all (loss, silent peer).
    virtual void send(const std::string& from, const std::string& to, proto::Frame frame,
                      std::function<void(const proto::Frame&)> on_response) = 0;

    virtual std::mt19937_64& rng() = 0;
};

} // namespace meld::net
