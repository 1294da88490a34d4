//! Holds the `acceptance` test binary only. It runs after the library and
//! CLI suites, so a failing criterion does not hide their results.
