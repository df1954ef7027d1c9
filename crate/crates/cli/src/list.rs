//! Parsing of list-valued flags.
//!
//! Real lists are `a,b,c` or `start..end:step` (end inclusive). Integer
//! lists are `a,b,c` or `start..end` (end inclusive).

fn parse_one<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.trim()
        .parse()
        .map_err(|_| format!("cannot parse `{}`", s.trim()))
}

fn non_empty<T>(v: Vec<T>, s: &str) -> Result<Vec<T>, String> {
    if v.is_empty() {
        return Err(format!("empty list `{s}`"));
    }
    Ok(v)
}

fn comma_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    non_empty(s.split(',').map(parse_one).collect::<Result<_, _>>()?, s)
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    let Some((start, rest)) = s.split_once("..") else {
        let v: Vec<f64> = comma_list(s)?;
        if v.iter().any(|x| x.is_nan()) {
            return Err(format!("NaN in `{s}`"));
        }
        return Ok(v);
    };
    let (end, step) = rest
        .split_once(':')
        .ok_or_else(|| format!("range `{s}` needs a step, as in 0..32:0.5"))?;
    let (start, end, step): (f64, f64, f64) = (parse_one(start)?, parse_one(end)?, parse_one(step)?);
    if !(start.is_finite() && end.is_finite() && step.is_finite() && step > 0.0 && end >= start) {
        return Err(format!("bad range `{s}`"));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| start + i as f64 * step).collect())
}

pub fn parse_i64_list(s: &str) -> Result<Vec<i64>, String> {
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b): (i64, i64) = (parse_one(a)?, parse_one(b)?);
            non_empty((a..=b).collect(), s)
        }
        None => comma_list(s),
    }
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    comma_list(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_lists() {
        assert_eq!(parse_f64_list("0").unwrap(), vec![0.0]);
        assert_eq!(parse_f64_list("-4, 2.5,10").unwrap(), vec![-4.0, 2.5, 10.0]);
        assert_eq!(parse_f64_list("0..2:0.5").unwrap(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(parse_f64_list("-14..6:2").unwrap().len(), 11);
        assert_eq!(parse_f64_list("0..32:0.1").unwrap().len(), 321);
        assert!(parse_f64_list("0..1").is_err());
        assert!(parse_f64_list("0..1:0").is_err());
        assert!(parse_f64_list("a,b").is_err());
        assert!(parse_f64_list("").is_err());
    }

    #[test]
    fn integer_lists() {
        assert_eq!(parse_i64_list("-2..2").unwrap(), vec![-2, -1, 0, 1, 2]);
        assert_eq!(parse_i64_list("3,-1").unwrap(), vec![3, -1]);
        assert!(parse_i64_list("2..1").is_err());
        assert_eq!(parse_usize_list("1,65").unwrap(), vec![1, 65]);
        assert!(parse_usize_list("-1").is_err());
    }
}
