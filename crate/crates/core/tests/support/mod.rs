pub mod random_state;
