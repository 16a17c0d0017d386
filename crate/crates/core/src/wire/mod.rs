//! Header codecs and the negotiation client.

mod header;
mod negotiate;

pub use header::{
    decode_agreement_header, decode_request_header, encode_agreement_header, encode_request_header,
    AgreementEnvelope, Disposition, HeaderError, PolicySource, RequestHeader, DATA_POLICY,
    DATA_POLICY_REQUEST,
};
pub use negotiate::{
    accept_offer, negotiate, NegotiationError, NegotiationOffer, NegotiationResult, Transport,
    TransportResponse, N_TRIPLES,
};
