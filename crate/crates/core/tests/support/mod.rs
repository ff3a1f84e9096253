pub mod netlists;
