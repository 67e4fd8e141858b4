#pragma once

// Brute-force model of a token circulating on a ring, held as a plain array.
// It shares no code with the protocol implementation and is used to derive
// the expected (node, hop) visit sequence.

#include <cstdint>
#include <numeric>
#include <vector>

namespace oracle {

struct Visit {
    int node;
    std::int64_t hop;  // value carried on the wire when the node reads it

    friend bool operator==(const Visit&, const Visit&) = default;
};

struct Trace {
    std::vector<Visit> visits;          // every receipt, in time order
    std::vector<std::int64_t> tx_hops;  // every transmission, in time order
};

/// The origin (slot 0) writes the token with hop 0. Each receiver that is not
/// absorbing writes it on with hop + 1. The origin absorbs on its k-th receipt.
inline Trace simulate_token(int n, int k) {
    std::vector<int> ring(static_cast<std::size_t>(n));
    std::iota(ring.begin(), ring.end(), 1);

    Trace trace;
    std::size_t pos = 0;
    std::int64_t hop = 0;
    int origin_receipts = 0;
    trace.tx_hops.push_back(hop);
    for (;;) {
        pos = (pos + 1) % ring.size();
        trace.visits.push_back({ring[pos], hop});
        if (pos == 0 && ++origin_receipts == k) break;
        hop += 1;
        trace.tx_hops.push_back(hop);
    }
    return trace;
}

/// A DATA frame injected at `start` with the given ttl: returns the slot
/// indices (1-based) it is read at, the last one being where it is absorbed.
inline std::vector<int> simulate_probe(int n, int start, int ttl) {
    std::vector<int> seen;
    int pos = start - 1;
    for (int links = 1; links <= ttl; ++links) {
        pos = (pos + 1) % n;
        seen.push_back(pos + 1);
    }
    return seen;
}

}  // namespace oracle
