use std::net::{TcpListener, TcpStream};
use std::thread;

use stylus_haptics::protocol::{serve, Client, DeviceState, Message};
use stylus_haptics::rotation::RotationDirection;
use stylus_haptics::timeline::WaveformShape;

#[test]
fn tcp_session_with_virtual_device() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let server = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut device = DeviceState::new();
        let report = serve(stream.try_clone().unwrap(), stream, &mut device).unwrap();
        (report, device)
    });

    let mut client = Client::new(TcpStream::connect(addr).unwrap());
    client.send(&Message::Ping.to_frame()).unwrap();
    assert_eq!(Message::try_from(&client.recv().unwrap()).unwrap(), Message::Pong);

    let rotation = Message::Rotation {
        direction: RotationDirection::Ccw,
        on_ms: 200,
        off_ms: 200,
        shape: WaveformShape::DecreasingRamp,
        count: 3,
        amplitude: 255,
    };
    client.send(&rotation.to_frame()).unwrap();
    client.send(&rotation.to_frame()).unwrap();
    client.send(&Message::Status.to_frame()).unwrap();
    let status = Message::try_from(&client.recv().unwrap()).unwrap();
    assert_eq!(status, Message::StatusReply { busy: true, queued: 1 });

    // dropping the client closes the connection and ends the session
    drop(client.into_inner());
    let (report, device) = server.join().unwrap();
    assert_eq!(report.frames, 4);
    assert_eq!(report.replies, 2);
    assert_eq!(report.naks, 0);
    assert!(device.busy());
}
