//! Holds the `acceptance` test target, kept in its own package so it runs
//! after the other packages in a workspace test run.
