pub mod bessel_oracle;
