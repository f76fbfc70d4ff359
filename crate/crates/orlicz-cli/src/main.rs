fn main() {
    println!("orlicz");
}
