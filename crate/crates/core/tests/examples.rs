// Every example must run to completion.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));

            #[test]
            fn runs() {
                main().unwrap();
            }
        }
    };
}

example!(build_ensemble);
example!(poisson_vs_goe);
example!(localization);
example!(rosenzweig_porter);
example!(dbm_stability);
example!(resolvent_identities);
example!(wegner_minami);
example!(reproducible_run);
