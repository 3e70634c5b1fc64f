#include "sdsec/dnssec.hpp"
#include "support/generators.hpp"

#include <doctest.h>

using namespace sdsec;
using namespace std::chrono_literals;

namespace {

Bytes seed(std::uint8_t first) {
    Bytes s(32);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<std::uint8_t>(first + i);
    return s;
}

UnixTime at(std::int64_t t) { return UnixTime{std::chrono::seconds{t}}; }

const char *kReferenceSvcbHex =
    "00010000030002772d000400040a000005ff00000111ff0100020002ff02000101ff03000400000002";

ResourceRecordSet reference_rrset() {
    return {DnsName::parse("_someip.id0x0001.service."), RRType::SVCB, kClassIN, 3600, {from_hex(kReferenceSvcbHex)}};
}

// A zone with KSK + ZSK; DNSKEY set signed by the KSK.
struct TestZone {
    DnsName origin;
    ZoneKeys keys;
    SignedRRset dnskeys;

    TestZone(const std::string &name, const std::string &key_seed, ValidityWindow w)
        : origin(DnsName::parse(name)), keys(ZoneKeys::derive(key_seed)) {
        dnskeys.rrset = {origin, RRType::DNSKEY, kClassIN, 3600,
                         {encode_dnskey_rdata(keys.ksk.dnskey), encode_dnskey_rdata(keys.zsk.dnskey)}};
        dnskeys.rrset.canonicalize();
        dnskeys.rrsigs = {encode_rrsig_rdata(sign_rrset(dnskeys.rrset, keys.ksk, origin, w))};
    }
    SignedRRset sign(ResourceRecordSet rrset, ValidityWindow w) const {
        rrset.canonicalize();
        return {rrset, {encode_rrsig_rdata(sign_rrset(rrset, keys.zsk, origin, w))}};
    }
    TrustAnchor anchor() const { return {origin, compute_ds(origin, keys.ksk.dnskey)}; }
    ZoneCut cut() const { return {origin, dnskeys, std::nullopt}; }
};

const ValidityWindow kWindow{at(1'700'000'000), at(1'800'000'000)};
const UnixTime kNow = at(1'750'000'000);

}  // namespace

TEST_CASE("signature matches the independent implementation bit for bit") {
    // Ed25519 is deterministic, so an RRSIG produced by dnspython over the same RRset,
    // key and window must equal ours.
    auto zsk = ZoneSigningKey::from_key(Ed25519Key::from_seed(seed(33)), KeyRole::Zsk);
    CHECK(zsk.key_tag == 56620);
    auto sig = sign_rrset(reference_rrset(), zsk, DnsName::parse("service."), kWindow);
    CHECK(to_hex(encode_rrsig_rdata(sig)) ==
          "00400f0300000e106b49d2006553f100dd2c0773657276696365008e2f2e711d1f8f10c02b613f08786832610057afeb1c6e5a00"
          "5607b844c71f6c01680d8b1c6e1c3ae52b0c3941556df44f407a8e047f649407d9d827bf2c240e");
}

TEST_CASE("DS digest matches the independent implementation") {
    auto ksk = ZoneSigningKey::from_key(Ed25519Key::from_seed(seed(1)), KeyRole::Ksk);
    CHECK(ksk.key_tag == 36560);
    auto ds = compute_ds(DnsName::parse("service."), ksk.dnskey);
    CHECK(ds.key_tag == 36560);
    CHECK(to_hex(ds.digest) == "f410d61d30e5fbe7daa4b6628c1a5362bdd00f38caaf7b249c58f0c811f1b928");
    // owner case does not matter
    CHECK(compute_ds(DnsName::parse("SERVICE."), ksk.dnskey) == ds);
}

TEST_CASE("sign then verify; mutations and wrong keys fail") {
    auto keys = ZoneKeys::derive("t");
    auto rrset = reference_rrset();
    auto sig = sign_rrset(rrset, keys.zsk, DnsName::parse("service."), kWindow);
    CHECK(verify_rrsig(rrset, sig, keys.zsk.dnskey, kNow).secure);

    auto flipped = rrset;
    flipped.rdatas[0][7] ^= 0x01;
    CHECK(verify_rrsig(flipped, sig, keys.zsk.dnskey, kNow).reason == BogusReason::SignatureInvalid);

    auto other = ZoneKeys::derive("other");
    CHECK_FALSE(verify_rrsig(rrset, sig, other.zsk.dnskey, kNow).secure);

    CHECK(verify_rrsig(rrset, sig, keys.zsk.dnskey, at(1'800'000'001)).reason == BogusReason::Expired);
    CHECK(verify_rrsig(rrset, sig, keys.zsk.dnskey, at(1'699'999'999)).reason == BogusReason::NotYetValid);
    // the window bounds are inclusive
    CHECK(verify_rrsig(rrset, sig, keys.zsk.dnskey, kWindow.expiration).secure);
    CHECK(verify_rrsig(rrset, sig, keys.zsk.dnskey, kWindow.inception).secure);

    // owner name case is irrelevant to the signature
    auto upper = rrset;
    upper.owner = DnsName::parse("_SOMEIP.ID0x0001.SERVICE.");
    CHECK(verify_rrsig(upper, sig, keys.zsk.dnskey, kNow).secure);
}

TEST_CASE("signing errors") {
    auto pub_only = ZoneSigningKey::from_key(Ed25519Key::from_public(ZoneKeys::derive("x").zsk.key.public_key()),
                                             KeyRole::Zsk);
    CHECK_THROWS_AS(sign_rrset(reference_rrset(), pub_only, DnsName::parse("service."), kWindow), DnssecError);
    auto keys = ZoneKeys::derive("x");
    CHECK_THROWS_AS(sign_rrset(reference_rrset(), keys.zsk, DnsName::parse("service."), {kNow, kNow}), DnssecError);
    CHECK_THROWS_AS(sign_rrset(reference_rrset(), keys.zsk, DnsName::parse("other."), kWindow), DnssecError);
}

TEST_CASE("single zone chain") {
    TestZone zone("service.", "single", kWindow);
    auto leaf = zone.sign(reference_rrset(), kWindow);
    std::vector<ZoneCut> cuts{zone.cut()};
    CHECK(validate_chain(leaf, cuts, zone.anchor(), kNow).secure);

    auto bad_anchor = zone.anchor();
    bad_anchor.ds.digest[0] ^= 0x80;
    auto r = validate_chain(leaf, cuts, bad_anchor, kNow);
    CHECK_FALSE(r.secure);
    CHECK(r.reason == BogusReason::BrokenDelegation);

    auto wrong_tag = zone.anchor();
    wrong_tag.ds.key_tag ^= 1;
    CHECK(validate_chain(leaf, cuts, wrong_tag, kNow).reason == BogusReason::KeyTagMismatch);

    CHECK(validate_chain(leaf, {}, zone.anchor(), kNow).reason == BogusReason::BrokenDelegation);
    SignedRRset unsigned_leaf{leaf.rrset, {}};
    CHECK_FALSE(validate_chain(unsigned_leaf, cuts, zone.anchor(), kNow).secure);
}

TEST_CASE("two zone chain through a signed delegation") {
    TestZone parent("service.", "parent", kWindow);
    TestZone child("oem.service.", "child", kWindow);
    ResourceRecordSet ds_set{child.origin, RRType::DS, kClassIN, 3600,
                             {encode_ds_rdata(compute_ds(child.origin, child.keys.ksk.dnskey))}};
    ZoneCut child_cut = child.cut();
    child_cut.ds = parent.sign(ds_set, kWindow);
    ResourceRecordSet leaf_set = reference_rrset();
    leaf_set.owner = DnsName::parse("_someip.id0x0001.oem.service.");
    auto leaf = child.sign(leaf_set, kWindow);

    std::vector<ZoneCut> cuts{child_cut, parent.cut()};  // order does not matter
    CHECK(validate_chain(leaf, cuts, parent.anchor(), kNow).secure);

    SUBCASE("missing child cut") {
        std::vector<ZoneCut> only_parent{parent.cut()};
        CHECK(validate_chain(leaf, only_parent, parent.anchor(), kNow).reason == BogusReason::BrokenDelegation);
    }
    SUBCASE("DS digest altered") {
        auto tampered = cuts;
        auto ds = decode_ds_rdata(tampered[0].ds->rrset.rdatas[0]);
        ds.digest[5] ^= 0x10;
        tampered[0].ds->rrset.rdatas[0] = encode_ds_rdata(ds);
        // the DS RRSIG no longer verifies either way
        CHECK_FALSE(validate_chain(leaf, tampered, parent.anchor(), kNow).secure);
        // re-signing the altered DS by the parent isolates the digest check
        tampered[0].ds = parent.sign(tampered[0].ds->rrset, kWindow);
        CHECK(validate_chain(leaf, tampered, parent.anchor(), kNow).reason == BogusReason::BrokenDelegation);
    }
    SUBCASE("missing DS") {
        auto tampered = cuts;
        tampered[0].ds.reset();
        CHECK(validate_chain(leaf, tampered, parent.anchor(), kNow).reason == BogusReason::BrokenDelegation);
    }
    SUBCASE("leaf expired") {
        auto expired = child.sign(leaf_set, {at(1'600'000'000), at(1'700'000'000)});
        CHECK(validate_chain(expired, cuts, parent.anchor(), kNow).reason == BogusReason::Expired);
    }
    SUBCASE("leaf signed by the parent is rejected") {
        auto wrong_signer = parent.sign(leaf_set, kWindow);
        CHECK_FALSE(validate_chain(wrong_signer, cuts, parent.anchor(), kNow).secure);
    }
}

TEST_CASE("validation is deterministic") {
    TestZone zone("service.", "det", kWindow);
    auto leaf = zone.sign(reference_rrset(), kWindow);
    std::vector<ZoneCut> cuts{zone.cut()};
    auto a = validate_chain(leaf, cuts, zone.anchor(), kNow);
    auto b = validate_chain(leaf, cuts, zone.anchor(), kNow);
    CHECK(a.secure == b.secure);
    CHECK(a.detail == b.detail);
}
