#pragma once

#include <functional>
#include <string>

namespace dipsim {

// Deterministic CSV number format: '.' decimal separator, scientific notation
// for |x| < 1e-3, 12 significant digits.
std::string csv_num(double x);

// Runs fn(0..n-1) on `workers` threads with deterministic result placement
// (callers write into preallocated slots). workers <= 1 runs inline.
// Exceptions from tasks are rethrown on the calling thread.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace dipsim
