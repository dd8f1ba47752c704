#pragma once

namespace fedmri {

// Keeps freed tensor buffers in the heap instead of returning them to the
// OS after every op. No-op outside glibc.
void tune_allocator();

}  // namespace fedmri
