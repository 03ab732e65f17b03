// Chebyshev tables for the mid-range branches of erfcx and dawson.
// Generated by tools/gen_special_tables.py — do not edit by hand.
//
// Series variable: y = 4/(4+x). Coefficients are Chebyshev-T on
// [y_lo, y_hi], evaluated by Clenshaw recurrence in f64.

pub(super) struct ChebInterval {
    pub y_lo: f64,
    pub y_hi: f64,
    pub coefs: &'static [f64],
}

pub(super) static ERFCX_CHEB: &[ChebInterval] = &[
    ChebInterval {
        y_lo: 0.25,
        y_hi: 1.0,
        coefs: &[
            0.8309208967971625,
            0.1698173581061137,
            0.015672099154603335,
            -0.008495773928450325,
            -0.005480069066346978,
            -0.0018807887135038792,
            -0.0004592601746443704,
            -8.313291873063653e-05,
            -1.062130587306584e-05,
            -7.465490625837084e-07,
            2.556971884686498e-08,
            1.229521451189057e-08,
            8.540406441017404e-10,
            -1.0167696825486095e-10,
            -1.9366313810609304e-11,
            4.772035211627899e-13,
            3.2693160132557724e-13,
            2.9132207887414453e-15,
            -5.466572792307109e-15,
            -1.2395100430008653e-16,
            9.760693441553459e-17,
            1.9175996333906644e-18,
            -1.868564401857006e-18,
        ],
    },
];

pub(super) static DAWSON_CHEB: &[ChebInterval] = &[
    ChebInterval {
        y_lo: 0.25,
        y_hi: 0.525,
        coefs: &[
            1.0180752053988102,
            0.018910972930184934,
            0.005298656844465989,
            0.0011548799930876526,
            0.00024488874081597233,
            5.413178231973235e-05,
            1.2881902755946726e-05,
            3.3247720999115583e-06,
            9.078376393834467e-07,
            2.458030343259539e-07,
            5.8173118525461295e-08,
            8.070767586413822e-09,
            -2.201216840220625e-09,
            -2.411439307552036e-09,
            -1.1612083153545594e-09,
            -3.5686441020863697e-10,
            -4.7491988640424265e-11,
            2.0497055196692108e-11,
            1.6297591276987454e-11,
            5.211830882633099e-12,
            3.256713033549473e-13,
            -5.16043613874648e-13,
            -2.5724869083633166e-13,
            -3.792232608544447e-14,
            1.7874549163492103e-14,
            1.1288378993095823e-14,
            1.6891706068532467e-15,
            -8.526656601013713e-16,
            -4.810876872564312e-16,
            -3.8615073184852984e-17,
            4.885576348045088e-17,
            1.8126895369454795e-17,
            -1.3687599416774794e-18,
            -2.580171698968554e-18,
            -4.187214022356048e-19,
            2.309671695940131e-19,
        ],
    },
    ChebInterval {
        y_lo: 0.525,
        y_hi: 0.8,
        coefs: &[
            1.1421257934964386,
            0.07183713974318315,
            -0.07098498938379366,
            -0.05952206647925303,
            -0.01333704080339031,
            0.003963986282130159,
            0.0023677712071092528,
            -7.22954985269719e-05,
            -0.00023161402085295537,
            -5.651319575628202e-06,
            1.8987676073161416e-05,
            2.725140506716839e-07,
            -1.4101256073859411e-06,
            5.361325606745084e-08,
            9.143797947631089e-08,
            -1.1089503570540817e-08,
            -4.653311514467792e-09,
            1.1706693286957132e-09,
            1.3531250500645205e-10,
            -8.378171730566219e-11,
            3.765305539755454e-12,
            3.993196813533598e-12,
            -7.905726521025872e-13,
            -8.40036202851003e-14,
            5.3307850507116454e-14,
            -4.619567486629912e-15,
            -1.804307334746455e-15,
            5.327477472780436e-16,
            -9.987217762828175e-18,
            -2.2705843818852097e-17,
            4.6311794401607616e-18,
            1.0673637833149661e-19,
        ],
    },
];

// 1 erfcx interval(s), 23 coefficients; 2 dawson interval(s), 68 coefficients.
