//! Holds the `acceptance` test target. Run it with
//! `cargo test -p fsd-validation --test acceptance`.
