use autoconv_core::{resume, run, CertifyJob, CertifyOutcome, Checkpoint, Error, MeshSpec, Method, RangeMode, RunOptions};

fn job(n: usize, m: u64, method: Method) -> CertifyJob {
    CertifyJob::new(MeshSpec::new(n, m).unwrap(), RangeMode::Proof, method).unwrap()
}

fn uninterrupted(job: CertifyJob) -> String {
    run(job, &RunOptions::default(), None)
        .unwrap()
        .certificate()
        .unwrap()
        .to_json()
        .unwrap()
}

fn interrupted(job: CertifyJob, path: &std::path::Path, chunks: u64) -> Checkpoint {
    let opts = RunOptions {
        checkpoint_path: Some(path.to_path_buf()),
        stop_after_chunks: Some(chunks),
        batch_chunks: 2,
        ..RunOptions::default()
    };
    match run(job, &opts, None).unwrap() {
        CertifyOutcome::Interrupted(c) => *c,
        CertifyOutcome::Complete(_) => panic!("run finished within {chunks} chunks"),
    }
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    for method in [Method::GlobalLipschitz, Method::CellQuadratic] {
        let j = job(2, 12, method);
        let path = dir.path().join(format!("{method}.json"));
        let ckpt = interrupted(j, &path, 5);
        assert_eq!(ckpt.chunks_done, 5);
        assert!(ckpt.certificate.is_none());

        // continue in two more legs from the file on disk
        let on_disk = Checkpoint::load(&path).unwrap();
        assert_eq!(on_disk, ckpt);
        let opts = RunOptions {
            checkpoint_path: Some(path.clone()),
            stop_after_chunks: Some(3),
            threads: Some(2),
            ..RunOptions::default()
        };
        let mid = match run(j, &opts, Some(on_disk)).unwrap() {
            CertifyOutcome::Interrupted(c) => *c,
            CertifyOutcome::Complete(_) => panic!("expected another interruption"),
        };
        assert_eq!(mid.chunks_done, 8);
        let cert = resume(Checkpoint::load(&path).unwrap(), &RunOptions::default()).unwrap();
        assert_eq!(cert.to_json().unwrap(), uninterrupted(j));
    }
}

#[test]
fn completed_checkpoint_returns_stored_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("done.json");
    let j = job(1, 20, Method::CellQuadratic);
    let opts = RunOptions {
        checkpoint_path: Some(path.clone()),
        ..RunOptions::default()
    };
    let cert = run(j, &opts, None).unwrap().certificate().unwrap();
    let ckpt = Checkpoint::load(&path).unwrap();
    assert_eq!(ckpt.next_chunk, None);
    assert_eq!(ckpt.certificate.as_ref(), Some(&cert));
    assert_eq!(resume(ckpt, &RunOptions::default()).unwrap(), cert);
}

#[test]
fn corrupted_cursor_is_a_checkpoint_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let j = job(2, 10, Method::GlobalLipschitz);
    let mut ckpt = interrupted(j, &path, 2);
    for bad in ["7,x", "99,0", "1,2,3", ""] {
        ckpt.next_chunk = Some(bad.to_string());
        let err = resume(ckpt.clone(), &RunOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Checkpoint(_)), "{bad:?}: {err}");
    }
}

#[test]
fn mismatched_job_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let ckpt = interrupted(job(2, 10, Method::GlobalLipschitz), &path, 2);
    for other in [
        job(2, 12, Method::GlobalLipschitz),
        job(2, 10, Method::CellQuadratic),
        job(3, 10, Method::GlobalLipschitz),
        CertifyJob::new(MeshSpec::new(2, 10).unwrap(), RangeMode::Theorem, Method::GlobalLipschitz).unwrap(),
    ] {
        let err = run(other, &RunOptions::default(), Some(ckpt.clone())).unwrap_err();
        assert!(matches!(err, Error::Checkpoint(_)), "{err}");
    }
}

#[test]
fn unreadable_checkpoint_file_is_a_checkpoint_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("junk.json");
    std::fs::write(&path, "{ not json").unwrap();
    assert!(matches!(Checkpoint::load(&path), Err(Error::Checkpoint(_))));
}

#[test]
fn certificate_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let cert = uninterrupted(job(2, 8, Method::CellQuadratic));
    let parsed = autoconv_core::Certificate::from_json(&cert).unwrap();
    parsed.save(&path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), cert);
    assert_eq!(autoconv_core::Certificate::load(&path).unwrap(), parsed);
}
