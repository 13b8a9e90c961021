#pragma once

#include <cstddef>
#include <string_view>

namespace trajcurate {

/// Count added/removed body lines in unified-diff text. File headers
/// (`+++`/`---`) do not count; only lines inside `@@` hunks do. Text with
/// no hunk headers contributes nothing, so the function is safe to run
/// over arbitrary assistant prose.
inline std::size_t diff_lines_changed(std::string_view text) {
    std::size_t count = 0;
    bool in_hunk = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos
                                                     ? std::string_view::npos
                                                     : eol - pos);
        if (line.starts_with("@@") && line.find("@@", 2) != std::string_view::npos) {
            in_hunk = true;
        } else if (in_hunk) {
            if (line.starts_with("+++") || line.starts_with("---")) {
                in_hunk = false; // next file header
            } else if (line.starts_with("+") || line.starts_with("-")) {
                ++count;
            } else if (line.starts_with(" ") || line.starts_with("\\")) {
                // context or "\ No newline at end of file"
            } else {
                in_hunk = false;
            }
        }
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    return count;
}

} // namespace trajcurate
