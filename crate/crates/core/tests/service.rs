use std::io::Write;
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::thread;

use uuid::Uuid;
use vibraverify::preprocess::WakeMessage;
use vibraverify::service::{read_frame, request_verdict, serve, write_frame, ErrorFrame};
use vibraverify::signal::{encode_wav, format_accel_csv, WavEncoding};
use vibraverify::similarity::verdict_json;
use vibraverify::wearsim::{simulate_accel, synth_utterance, AccelModel};
use vibraverify::{verify, VerifyConfig};

fn start(config: VerifyConfig) -> std::net::SocketAddr {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let config = Arc::new(config);
    thread::spawn(move || serve(listener, config));
    addr
}

fn trial(word: u32, seed: u64) -> (Vec<u8>, Vec<u8>) {
    let audio = synth_utterance(word, seed).unwrap();
    let accel = simulate_accel(&audio, &AccelModel::default(), seed).unwrap();
    (encode_wav(&audio, WavEncoding::Pcm16).unwrap(), format_accel_csv(&accel).into_bytes())
}

#[test]
fn loopback_matches_direct_call() {
    let cfg = VerifyConfig::default();
    let addr = start(cfg.clone());
    let (wav, csv) = trial(3, 9);
    let wake = WakeMessage::new(Uuid::from_u128(42), 0);
    let reply = request_verdict(addr, &wake, &wav, &csv).unwrap();

    let mic = vibraverify::signal::decode_wav(&wav).unwrap();
    let accel = vibraverify::signal::parse_accel_csv(std::str::from_utf8(&csv).unwrap()).unwrap();
    let direct = verdict_json(&verify(&mic, &accel, &cfg).unwrap(), &cfg);
    assert_eq!(reply, direct);
}

#[test]
fn concurrent_sessions_are_isolated() {
    let cfg = VerifyConfig::default();
    let addr = start(cfg.clone());
    let jobs: Vec<_> = (0..8u32)
        .map(|i| {
            thread::spawn(move || {
                let (wav, csv) = trial(i % 20, u64::from(i));
                let reply = request_verdict(addr, &WakeMessage::new(Uuid::from_u128(i.into()), 0), &wav, &csv).unwrap();
                (wav, csv, reply)
            })
        })
        .collect();
    for job in jobs {
        let (wav, csv, reply) = job.join().unwrap();
        let mic = vibraverify::signal::decode_wav(&wav).unwrap();
        let accel = vibraverify::signal::parse_accel_csv(std::str::from_utf8(&csv).unwrap()).unwrap();
        assert_eq!(reply, verdict_json(&verify(&mic, &accel, &cfg).unwrap(), &cfg));
    }
}

#[test]
fn bad_input_gets_error_frame() {
    let addr = start(VerifyConfig::default());
    let wake = WakeMessage::new(Uuid::from_u128(1), 0);
    let reply = request_verdict(addr, &wake, b"not a wav", b"t,x,y,z\n0,0,0,0\n").unwrap();
    let err: ErrorFrame = serde_json::from_str(&reply).unwrap();
    assert!(!err.error.is_empty());

    // a bad wake frame is refused before the payload frames are read
    let mut s = TcpStream::connect(addr).unwrap();
    write_frame(&mut s, b"{\"type\":\"sleep\"}").unwrap();
    let reply = read_frame(&mut s).unwrap();
    let err: ErrorFrame = serde_json::from_slice(&reply).unwrap();
    assert!(err.error.contains("wake"), "{}", err.error);

    // a truncated session does not take the server down
    let mut s = TcpStream::connect(addr).unwrap();
    s.write_all(&[0, 0, 0, 200, b'{']).unwrap();
    drop(s);
    let (wav, csv) = trial(0, 0);
    assert!(request_verdict(addr, &wake, &wav, &csv).unwrap().contains("\"verdict\""));
}
