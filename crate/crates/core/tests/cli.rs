use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const TOPOLOGY: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/four_networks.json");

fn nsroute(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsroute")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn one_job(app: &str) -> String {
    format!(
        r#"{{"jobs":[{{"job_id":"j1","user_id":"alice","external_ip":"10.20.30.40","app":"{app}","n_files":4,"arrival_time":0,"payload":"x=1"}}]}}"#
    )
}

#[test]
fn run_single_job_stores_four_files() {
    let dir = tempfile::tempdir().unwrap();
    let workload = write(dir.path(), "w.json", &one_job("App1"));
    let out = dir.path().join("out");
    let o = nsroute(&["run", "--topology", TOPOLOGY, "--workload", workload.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut names: Vec<String> = std::fs::read_dir(out.join("10.20.30.40"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["App1_out1.dat", "App1_out2.dat", "App1_out3.dat", "App1_out4.dat"]);
    for f in ["trace.txt", "metrics.txt", "log.txt"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let log = std::fs::read_to_string(out.join("log.txt")).unwrap();
    assert!(log.starts_with("LOG FILE\n"));
    assert!(log.lines().nth(2).unwrap().starts_with("10.20.30.40\tApp1\t"));
}

#[test]
fn run_is_repeatable_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let workload = write(dir.path(), "w.json", &one_job("App3"));
    let plan = write(dir.path(), "f.json", r#"{"crashes":[],"frame_drop_rate":0.3,"rng_seed":1}"#);
    let mut seen = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("o{i}"));
        let o = nsroute(&[
            "run", "--topology", TOPOLOGY, "--workload", workload.to_str().unwrap(), "--fault-plan", plan.to_str().unwrap(),
            "--seed", "8", "--timeout-t", "40", "--interval2", "10", "--out", out.to_str().unwrap(),
        ]);
        seen.push((code(&o), o.stdout, std::fs::read(out.join("trace.txt")).unwrap(), std::fs::read(out.join("metrics.txt")).unwrap()));
    }
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn run_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let workload = write(dir.path(), "w.json", &one_job("App1"));
    let missing = nsroute(&["run", "--topology", "/nonexistent/t.json", "--workload", workload.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&missing), 2);

    let unhosted = write(dir.path(), "u.json", &one_job("matlab"));
    let o = nsroute(&["run", "--topology", TOPOLOGY, "--workload", unhosted.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);

    let o = nsroute(&["run", "--topology", TOPOLOGY, "--workload", workload.to_str().unwrap(), "--out", out.to_str().unwrap(), "--timeout-t", "0"]);
    assert_eq!(code(&o), 2);

    let bad_plan = write(dir.path(), "p.json", r#"{"crashes":[{"network":"n9","server":"s1","time":1}]}"#);
    let o = nsroute(&[
        "run", "--topology", TOPOLOGY, "--workload", workload.to_str().unwrap(), "--fault-plan", bad_plan.to_str().unwrap(), "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);

    assert_eq!(code(&nsroute(&["run", "--topology", TOPOLOGY])), 1);
}

#[test]
fn run_with_one_unhosted_job_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let workload = write(
        dir.path(),
        "w.json",
        r#"{"jobs":[
            {"job_id":"a","user_id":"u","external_ip":"10.0.0.1","app":"App1","n_files":1,"arrival_time":0,"payload":""},
            {"job_id":"b","user_id":"u","external_ip":"10.0.0.1","app":"cst","n_files":1,"arrival_time":0,"payload":""}]}"#,
    );
    let out = dir.path().join("out");
    let o = nsroute(&["run", "--topology", TOPOLOGY, "--workload", workload.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
}

#[test]
fn similarity_command() {
    let o = nsroute(&["similarity", "--topology", TOPOLOGY, "--networks", "n1,n2"]);
    assert_eq!((code(&o), stdout(&o).as_str()), (0, "3/4 0.750000\n"));
    let o = nsroute(&["similarity", "--topology", TOPOLOGY, "--servers", "n1:s1,s1"]);
    assert_eq!((code(&o), stdout(&o).as_str()), (0, "1/1 1.000000\n"));
    // n1/s3 = {App1,App4}, n1/s4 = {App2,App3}
    let o = nsroute(&["similarity", "--topology", TOPOLOGY, "--servers", "n1:s3,s4"]);
    assert_eq!(stdout(&o), "0/1 0.000000\n");
    assert_eq!(code(&nsroute(&["similarity", "--topology", TOPOLOGY, "--networks", "n1,n7"])), 2);
    assert_eq!(code(&nsroute(&["similarity", "--topology", TOPOLOGY, "--servers", "n1:s1,s9"])), 2);
    assert_eq!(code(&nsroute(&["similarity", "--topology", TOPOLOGY, "--networks", "n1"])), 1);
}

const HEADER: &str = "LOG FILE\nExternal IP\tApplication\tInternal IP\tNo. of Files\tReceived\tDispatchedAt\n";

#[test]
fn log_scan_command() {
    let dir = tempfile::tempdir().unwrap();
    let complete = write(dir.path(), "c.log", &format!("{HEADER}10.20.30.40\tApp1\t192.168.10.50\t4\t4\t0\n"));
    let o = nsroute(&["log-scan", complete.to_str().unwrap(), "--now", "5000"]);
    assert_eq!((code(&o), stdout(&o).as_str()), (0, ""));

    let partial = write(
        dir.path(),
        "p.log",
        &format!("{HEADER}10.20.30.40\tApp1\t192.168.10.50\t4\t4\t0\n10.20.30.41\tApp2\t192.168.10.80\t6\t2\t100\n"),
    );
    let o = nsroute(&["log-scan", partial.to_str().unwrap(), "--now", "1100", "--timeout-t", "1000"]);
    assert_eq!((code(&o), stdout(&o).as_str()), (4, "MISSING 10.20.30.41 App2 192.168.10.80 2/6\n"));
    // one tick short of the timeout
    let o = nsroute(&["log-scan", partial.to_str().unwrap(), "--now", "1099", "--timeout-t", "1000"]);
    assert_eq!(code(&o), 0);

    let malformed = write(dir.path(), "m.log", &format!("{HEADER}10.20.30.40\tApp1\n"));
    let o = nsroute(&["log-scan", malformed.to_str().unwrap(), "--now", "0"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn replay_command() {
    let dir = tempfile::tempdir().unwrap();
    let workload = write(dir.path(), "w.json", &one_job("App2"));
    let plan = write(dir.path(), "f.json", r#"{"crashes":[],"frame_drop_rate":0.2,"rng_seed":3}"#);
    let out = dir.path().join("out");
    let o = nsroute(&[
        "run", "--topology", TOPOLOGY, "--workload", workload.to_str().unwrap(), "--fault-plan", plan.to_str().unwrap(), "--seed", "21",
        "--timeout-t", "30", "--interval2", "7", "--out", out.to_str().unwrap(),
    ]);
    assert!(matches!(code(&o), 0 | 4));
    let trace = out.join("trace.txt");
    let replay = |t: &Path| {
        nsroute(&[
            "replay", "--trace", t.to_str().unwrap(), "--topology", TOPOLOGY, "--workload", workload.to_str().unwrap(), "--fault-plan",
            plan.to_str().unwrap(),
        ])
    };
    assert_eq!(code(&replay(&trace)), 0);

    let text = std::fs::read_to_string(&trace).unwrap();
    let tampered = write(dir.path(), "t.txt", &text.replacen("kind=arrival", "kind=crash", 1));
    let o = replay(&tampered);
    assert_eq!(code(&o), 4);
    assert_eq!(stdout(&o), "diverged at line 2\n");

    let junk = write(dir.path(), "j.txt", "not a trace\n");
    assert_eq!(code(&replay(&junk)), 2);
}
