fn main() { println!("creascope"); }
