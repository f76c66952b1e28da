use mrlab::acceptance;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let ids: Vec<usize> = if args.is_empty() {
        (1..=14).collect()
    } else {
        args.iter().map(|a| a.parse().unwrap()).collect()
    };
    let seed = 0;
    for id in ids {
        let out = match id {
            1 => acceptance::criterion_1(),
            2 => acceptance::criterion_2(seed),
            3 => acceptance::criterion_3(seed),
            4 => acceptance::criterion_4(),
            5 => acceptance::criterion_5(seed),
            6 => acceptance::criterion_6(seed),
            7 => acceptance::criterion_7(seed),
            8 => acceptance::criterion_8(seed),
            9 => acceptance::criterion_9(seed),
            10 => acceptance::criterion_10(),
            11 => acceptance::criterion_11(seed),
            12 => acceptance::criterion_12(seed),
            13 => acceptance::criterion_13(seed),
            14 => acceptance::criterion_14(seed),
            _ => panic!("unknown criterion"),
        };
        println!("{}", out.line());
    }
}
