pub mod contract_model;
pub mod dft_oracle;
