//! Porter suffix-stripping stemmer.
//!
//! Follows the classic algorithm and the reference C implementation's two
//! departures from the 1980 paper (`bli` -> `ble` and the `logi` -> `log`
//! rule in step 2). Words shorter than three letters, and words containing
//! anything other than lowercase ASCII letters, are returned unchanged.

/// Letter classification: a consonant is anything but a/e/i/o/u, plus `y`
/// when it is not preceded by a consonant.
fn is_consonant(b: &[u8], i: usize) -> bool {
    match b[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => {
            if i == 0 {
                true
            } else {
                !is_consonant(b, i - 1)
            }
        }
        _ => true,
    }
}

/// The measure m of a stem: the number of vowel-consonant sequences in the
/// pattern [C](VC)^m[V].
fn measure(b: &[u8]) -> usize {
    let n = b.len();
    let mut i = 0;
    let mut m = 0;
    while i < n && is_consonant(b, i) {
        i += 1;
    }
    loop {
        while i < n && !is_consonant(b, i) {
            i += 1;
        }
        if i >= n {
            break;
        }
        while i < n && is_consonant(b, i) {
            i += 1;
        }
        m += 1;
    }
    m
}

fn has_vowel(b: &[u8]) -> bool {
    (0..b.len()).any(|i| !is_consonant(b, i))
}

fn ends_double_consonant(b: &[u8]) -> bool {
    let n = b.len();
    n >= 2 && b[n - 1] == b[n - 2] && is_consonant(b, n - 1)
}

/// Final consonant-vowel-consonant where the last consonant is not w, x, or
/// y (the *o condition).
fn ends_cvc(b: &[u8]) -> bool {
    let n = b.len();
    if n < 3 {
        return false;
    }
    is_consonant(b, n - 3)
        && !is_consonant(b, n - 2)
        && is_consonant(b, n - 1)
        && !matches!(b[n - 1], b'w' | b'x' | b'y')
}

fn ends_with(b: &[u8], suffix: &str) -> bool {
    b.len() >= suffix.len() && &b[b.len() - suffix.len()..] == suffix.as_bytes()
}

/// Apply a replacement-rule table: the longest matching suffix is selected;
/// if its measure condition fails, the step is a no-op (no fall-through).
fn apply_table(b: &mut Vec<u8>, rules: &[(&str, &str)], min_measure: usize) {
    let mut chosen: Option<(&str, &str)> = None;
    for &(suffix, replacement) in rules {
        if ends_with(b, suffix) && chosen.map_or(true, |(s, _)| suffix.len() > s.len()) {
            chosen = Some((suffix, replacement));
        }
    }
    if let Some((suffix, replacement)) = chosen {
        let stem_len = b.len() - suffix.len();
        if measure(&b[..stem_len]) > min_measure {
            b.truncate(stem_len);
            b.extend_from_slice(replacement.as_bytes());
        }
    }
}

const STEP2: &[(&str, &str)] = &[
    ("ational", "ate"),
    ("tional", "tion"),
    ("enci", "ence"),
    ("anci", "ance"),
    ("izer", "ize"),
    ("bli", "ble"),
    ("alli", "al"),
    ("entli", "ent"),
    ("eli", "e"),
    ("ousli", "ous"),
    ("ization", "ize"),
    ("ation", "ate"),
    ("ator", "ate"),
    ("alism", "al"),
    ("iveness", "ive"),
    ("fulness", "ful"),
    ("ousness", "ous"),
    ("aliti", "al"),
    ("iviti", "ive"),
    ("biliti", "ble"),
    ("logi", "log"),
];

const STEP3: &[(&str, &str)] = &[
    ("icate", "ic"),
    ("ative", ""),
    ("alize", "al"),
    ("iciti", "ic"),
    ("ical", "ic"),
    ("ful", ""),
    ("ness", ""),
];

const STEP4: &[&str] = &[
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent", "ion", "ou",
    "ism", "ate", "iti", "ous", "ive", "ize",
];

/// Porter stem of a word.
pub fn stem(word: &str) -> String {
    if word.len() <= 2 || !word.bytes().all(|c| c.is_ascii_lowercase()) {
        return word.to_string();
    }
    let mut b: Vec<u8> = word.as_bytes().to_vec();

    // Step 1a: plurals
    if ends_with(&b, "sses") {
        b.truncate(b.len() - 2);
    } else if ends_with(&b, "ies") {
        b.truncate(b.len() - 2);
    } else if !ends_with(&b, "ss") && ends_with(&b, "s") {
        b.truncate(b.len() - 1);
    }

    // Step 1b: -eed / -ed / -ing
    let mut restore_e = false;
    if ends_with(&b, "eed") {
        if measure(&b[..b.len() - 3]) > 0 {
            b.truncate(b.len() - 1);
        }
    } else if ends_with(&b, "ed") && has_vowel(&b[..b.len() - 2]) {
        b.truncate(b.len() - 2);
        restore_e = true;
    } else if ends_with(&b, "ing") && has_vowel(&b[..b.len() - 3]) {
        b.truncate(b.len() - 3);
        restore_e = true;
    }
    if restore_e {
        if ends_with(&b, "at") || ends_with(&b, "bl") || ends_with(&b, "iz") {
            b.push(b'e');
        } else if ends_double_consonant(&b) && !matches!(b[b.len() - 1], b'l' | b's' | b'z') {
            b.truncate(b.len() - 1);
        } else if measure(&b) == 1 && ends_cvc(&b) {
            b.push(b'e');
        }
    }

    // Step 1c: terminal y
    if ends_with(&b, "y") && has_vowel(&b[..b.len() - 1]) {
        let n = b.len();
        b[n - 1] = b'i';
    }

    apply_table(&mut b, STEP2, 0);
    apply_table(&mut b, STEP3, 0);

    // Step 4: strip residual suffixes when m > 1; -ion only after s or t
    let mut chosen: Option<&str> = None;
    for &suffix in STEP4 {
        if ends_with(&b, suffix) && chosen.map_or(true, |s| suffix.len() > s.len()) {
            chosen = Some(suffix);
        }
    }
    if let Some(suffix) = chosen {
        let stem_len = b.len() - suffix.len();
        let extra = suffix != "ion" || (stem_len > 0 && matches!(b[stem_len - 1], b's' | b't'));
        if extra && measure(&b[..stem_len]) > 1 {
            b.truncate(stem_len);
        }
    }

    // Step 5a: terminal e
    if ends_with(&b, "e") {
        let m = measure(&b[..b.len() - 1]);
        if m > 1 || (m == 1 && !ends_cvc(&b[..b.len() - 1])) {
            b.truncate(b.len() - 1);
        }
    }
    // Step 5b: -ll with m > 1
    if measure(&b) > 1 && ends_double_consonant(&b) && b[b.len() - 1] == b'l' {
        b.truncate(b.len() - 1);
    }

    String::from_utf8(b).expect("stemming preserves ASCII")
}
