use proptest::prelude::*;
use stemcast::checkpoint::{Checkpoint, CheckpointMeta, PEEPHOLE};
use stemcast::csvio::{read_frame, write_frame};
use stemcast_core::datasets::{ChannelScale, NormalizationParams, TimeSeriesFrame};
use stemcast_core::models::{Model, ModelConfig, ModelDims, ModelKind};
use stemcast_core::training::PipelineConfig;

fn finite() -> impl Strategy<Value = f64> {
    any::<f64>().prop_filter("finite", |v| v.is_finite())
}

fn frame() -> impl Strategy<Value = TimeSeriesFrame> {
    (1usize..20, 0usize..4, -500_000i64..500_000).prop_flat_map(|(n, m, start)| {
        (
            prop::collection::vec(prop::collection::vec(finite(), n), m),
            prop::collection::vec(finite(), n),
        )
            .prop_map(move |(channels, target)| {
                let names = (0..m).map(|i| format!("c{i}")).collect();
                TimeSeriesFrame::new(
                    (start..start + n as i64).collect(),
                    names,
                    channels,
                    "sdv".into(),
                    target,
                )
                .unwrap()
            })
    })
}

proptest! {
    #[test]
    fn csv_round_trip(frame in frame()) {
        let mut text = Vec::new();
        write_frame(&frame, &mut text).unwrap();
        let back = read_frame(text.as_slice()).unwrap();
        prop_assert_eq!(back.timestamps(), frame.timestamps());
        for (a, b) in back.target().iter().zip(frame.target()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        let mut again = Vec::new();
        write_frame(&back, &mut again).unwrap();
        prop_assert_eq!(again, text);
    }

    #[test]
    fn checkpoint_round_trip(seed in any::<u64>(), kind in prop::sample::select(ModelKind::ALL.to_vec()), lo in finite(), hi in finite()) {
        let mut pipeline = PipelineConfig::default();
        pipeline.model = ModelConfig::new(kind).with_dims(ModelDims {
            encoder: [3, 2],
            predictor: 3,
            head: 2,
            lstm: 3,
            gru: [2, 3],
            mlp: [3, 2],
        });
        pipeline.train.seed = seed;
        let model = Model::new(pipeline.model, 2, 3, seed).unwrap();
        let scale = ChannelScale { name: "sdv".into(), min: lo, max: hi };
        let ckpt = Checkpoint {
            meta: CheckpointMeta {
                architecture: kind.name().into(),
                peephole: PEEPHOLE.into(),
                seed,
                n_inputs: 2,
                window: 3,
                snapshot: "final".into(),
                input_names: vec!["a".into(), "sdv".into()],
                input_scales: NormalizationParams { channels: vec![ChannelScale { name: "a".into(), ..scale.clone() }, scale.clone()] },
                target_scale: scale,
                denoised: kind.uses_wavelet(),
                pipeline,
            },
            params: model.params().clone(),
        };
        let bytes = ckpt.to_bytes().unwrap();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.meta.target_scale.min.to_bits(), lo.to_bits());
        prop_assert_eq!(back.meta.target_scale.max.to_bits(), hi.to_bits());
        prop_assert_eq!(&back.meta, &ckpt.meta);
        prop_assert_eq!(back.to_bytes().unwrap(), bytes);
        let restored = back.model().unwrap();
        prop_assert!(restored.params().same_layout(model.params()));
    }
}
