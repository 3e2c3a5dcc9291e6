//! Deterministic term sampling from byte recipes, for property tests and
//! benchmarks. Every sampled term is well sorted and in normal form.

use crate::catalog::label_sort;
use crate::term::{apply, Ctor, Sort, Term};

/// Leaf of `sort`: a fixed name or public constant.
pub fn leaf(sort: Sort, pick: u8) -> Term {
    let (labels, consts): (&[&str], &[&str]) = match sort {
        Sort::Bitstring => (&["a", "b"], &["OTHERVARS"]),
        Sort::Key => (&["k", "kk"], &[]),
        Sort::Element => (&[], &["G1", "Gj1"]),
        Sort::Random => (&["r", "rr"], &[]),
        Sort::Id => (&["i", "ii"], &[]),
        Sort::Skey => (&["s", "ss", "sss"], &[]),
        Sort::Prf => (&[], &["AES_CMAC_PRF"]),
        Sort::Pkey => (&["pk"], &[]),
    };
    let n = labels.len() + consts.len();
    let i = pick as usize % n;
    if i < labels.len() {
        Term::Name { label: labels[i].into(), index: i as u32, sort }
    } else {
        Term::constant(consts[i - labels.len()], sort)
    }
}

/// Sorts of the labels sampled terms use, for parsing them back.
pub fn sort_of(label: &str) -> Option<Sort> {
    Some(match label {
        "a" | "b" => Sort::Bitstring,
        "k" | "kk" => Sort::Key,
        "r" | "rr" => Sort::Random,
        "i" | "ii" => Sort::Id,
        "s" | "ss" | "sss" => Sort::Skey,
        "pk" => Sort::Pkey,
        other => return label_sort(other),
    })
}

/// Sorts sampled when a slot accepts any sort.
pub const ANY: [Sort; 6] = [Sort::Bitstring, Sort::Key, Sort::Element, Sort::Random, Sort::Id, Sort::Skey];

/// Turns a byte recipe into a term of `sort`, at most `depth` deep.
/// An exhausted recipe yields leaves.
pub fn build(sort: Sort, bytes: &mut dyn Iterator<Item = u8>, depth: usize) -> Term {
    let b = bytes.next().unwrap_or(0);
    if depth == 0 || b.is_multiple_of(3) {
        return leaf(sort, b / 3);
    }
    let any = |bytes: &mut dyn Iterator<Item = u8>| ANY[bytes.next().unwrap_or(0) as usize % ANY.len()];
    let sub = |s: Sort, bytes: &mut dyn Iterator<Item = u8>| build(s, bytes, depth - 1);
    let choice = (b / 3) as usize;
    let t = match sort {
        Sort::Bitstring => match choice % 8 {
            0..=2 => {
                let ctor = [Ctor::Senc, Ctor::Ssign, Ctor::Pair][choice % 8];
                let (s1, s2) = (any(bytes), any(bytes));
                apply(ctor, vec![sub(s1, bytes), sub(s2, bytes)])
            }
            3 => apply(Ctor::Zk, vec![sub(Sort::Skey, bytes), sub(Sort::Skey, bytes), sub(Sort::Bitstring, bytes)]),
            4 => apply(Ctor::Fin, vec![sub(Sort::Bitstring, bytes)]),
            5 => apply(Ctor::IdToBitstring, vec![sub(Sort::Id, bytes)]),
            6 => apply(Ctor::RandomToBitstring, vec![sub(Sort::Random, bytes)]),
            _ => apply(Ctor::Sigr, vec![sub(Sort::Skey, bytes), sub(Sort::Skey, bytes), sub(Sort::Bitstring, bytes)]),
        },
        Sort::Key => match choice % 4 {
            0 => apply(Ctor::Pkdf2, vec![leaf(Sort::Prf, 0), sub(Sort::Bitstring, bytes), sub(Sort::Bitstring, bytes)]),
            1 => apply(Ctor::GetMs, vec![sub(Sort::Random, bytes), sub(Sort::Random, bytes), sub(Sort::Bitstring, bytes)]),
            2 => apply(Ctor::Xx, vec![sub(Sort::Skey, bytes), sub(Sort::Key, bytes)]),
            _ => apply(Ctor::ElementToKey, vec![sub(Sort::Element, bytes)]),
        },
        Sort::Element => match choice % 4 {
            0 | 1 => apply(Ctor::Exp, vec![sub(Sort::Element, bytes), sub(Sort::Skey, bytes)]),
            2 => apply(
                Ctor::GenH,
                vec![sub(Sort::Element, bytes), sub(Sort::Element, bytes), sub(Sort::Element, bytes), sub(Sort::Element, bytes)],
            ),
            _ => apply(Ctor::KeyToElement, vec![sub(Sort::Key, bytes)]),
        },
        Sort::Id => {
            let s = any(bytes);
            apply(Ctor::Hash, vec![sub(s, bytes)])
        }
        _ => return leaf(sort, b / 3),
    };
    t.expect("generator respects the signature")
}

