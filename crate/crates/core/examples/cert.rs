fn main() {
    let r = rvp_core::symkernel::verify_identity_catalog();
    print!("{}", r.to_table());
    println!("elapsed {:.2}s all={}", r.elapsed_seconds, r.all_proved());
}
